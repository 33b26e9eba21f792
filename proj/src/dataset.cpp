#include "okannet/dataset.hpp"

#include <algorithm>
#include <cctype>

#include "okannet/error.hpp"
#include "okannet/image.hpp"
#include "okannet/parallel.hpp"
#include "okannet/preprocess.hpp"
#include "okannet/rng.hpp"

namespace okannet {

namespace fs = std::filesystem;

namespace {

bool has_image_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

}  // namespace

DatasetIndex scan_dataset(const fs::path& root) {
  if (!fs::exists(root) || !fs::is_directory(root))
    throw DataError("\"" + root.string() + "\" folder not found");
  std::vector<fs::path> class_dirs;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory()) class_dirs.push_back(entry.path());
  std::sort(class_dirs.begin(), class_dirs.end(),
            [](const fs::path& a, const fs::path& b) {
              return a.filename().string() < b.filename().string();
            });
  DatasetIndex index;
  for (const auto& dir : class_dirs) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir))
      if (entry.is_regular_file() && has_image_extension(entry.path()))
        files.push_back(entry.path());
    if (files.empty()) continue;
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) {
                return a.string() < b.string();
              });
    const int32_t label = static_cast<int32_t>(index.class_names.size());
    index.class_names.push_back(dir.filename().string());
    for (auto& f : files) index.samples.push_back({std::move(f), label});
  }
  if (index.class_names.empty())
    throw DataError("no image classes found under " + root.string());
  return index;
}

LoadedDataset load_dataset(const fs::path& root, int64_t size) {
  if (size < 1) throw ConfigError("image size must be >= 1");
  const DatasetIndex index = scan_dataset(root);
  LoadedDataset ds;
  ds.class_names = index.class_names;
  ds.image_size = size;
  ds.images.resize(index.samples.size());
  ds.labels.resize(index.samples.size());
  const int64_t n = static_cast<int64_t>(index.samples.size());
  // DecodeError from a worker must surface on the caller thread.
  std::vector<std::exception_ptr> errors(static_cast<size_t>(n));
  parallel_for(n, [&](int64_t b, int64_t e) {
    for (int64_t i = b; i < e; ++i) {
      try {
        const auto& entry = index.samples[static_cast<size_t>(i)];
        ds.images[static_cast<size_t>(i)] =
            preprocess_image(decode_image(entry.path), size);
        ds.labels[static_cast<size_t>(i)] = entry.label;
      } catch (...) {
        errors[static_cast<size_t>(i)] = std::current_exception();
      }
    }
  });
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
  return ds;
}

BatchIterator::BatchIterator(int64_t dataset_size, int64_t batch_size,
                             bool shuffle, uint64_t epoch_seed)
    : n_(dataset_size),
      batch_size_(batch_size),
      shuffle_(shuffle),
      epoch_seed_(epoch_seed) {
  if (dataset_size < 1) throw ConfigError("batch iterator over empty dataset");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
}

std::vector<int64_t> BatchIterator::order(int64_t epoch) const {
  std::vector<int64_t> idx(static_cast<size_t>(n_));
  for (int64_t i = 0; i < n_; ++i) idx[static_cast<size_t>(i)] = i;
  if (shuffle_) {
    RandomEngine rng(mix_seed(epoch_seed_, static_cast<uint64_t>(epoch)));
    shuffle_in_place(idx, rng);
  }
  return idx;
}

int64_t BatchIterator::batches_per_epoch() const {
  return (n_ + batch_size_ - 1) / batch_size_;
}

Batch assemble_batch(const LoadedDataset& ds, std::span<const int64_t> indices,
                     const AugmentationConfig& aug, uint64_t aug_seed,
                     int64_t epoch) {
  if (indices.empty()) throw ConfigError("empty batch");
  const int64_t s = ds.image_size;
  Batch batch;
  batch.images = Tensor(Shape{static_cast<int64_t>(indices.size()), 3, s, s});
  batch.labels.resize(indices.size());
  const int64_t img_elems = 3 * s * s;
  float* dst = batch.images.data();
  for (size_t b = 0; b < indices.size(); ++b) {
    const int64_t i = indices[b];
    if (i < 0 || i >= ds.size())
      throw ShapeError("batch index out of range");
    const Tensor* pixels = &ds.images[static_cast<size_t>(i)];
    ImageSample transformed;
    if (aug.enabled) {
      RandomEngine rng(mix_seed(aug_seed, static_cast<uint64_t>(epoch),
                                static_cast<uint64_t>(i)));
      transformed =
          augment({*pixels, ds.labels[static_cast<size_t>(i)]}, aug, rng);
      pixels = &transformed.pixels;
    }
    if (pixels->shape() != Shape{int64_t{3}, s, s})
      throw ShapeError("dataset image has shape " + pixels->shape().str() +
                       ", expected [3," + std::to_string(s) + "," +
                       std::to_string(s) + "]");
    std::copy(pixels->data(), pixels->data() + img_elems,
              dst + static_cast<int64_t>(b) * img_elems);
    batch.labels[b] = ds.labels[static_cast<size_t>(i)];
  }
  return batch;
}

std::vector<Batch> epoch_batches(const LoadedDataset& ds,
                                 const BatchIterator& it, int64_t epoch,
                                 const AugmentationConfig& aug,
                                 uint64_t aug_seed) {
  const std::vector<int64_t> order = it.order(epoch);
  std::vector<Batch> out;
  out.reserve(static_cast<size_t>(it.batches_per_epoch()));
  for (int64_t b = 0; b < it.dataset_size(); b += it.batch_size()) {
    const int64_t e = std::min<int64_t>(b + it.batch_size(), it.dataset_size());
    out.push_back(assemble_batch(
        ds, std::span<const int64_t>(order.data() + b, order.data() + e), aug,
        aug_seed, epoch));
  }
  return out;
}

}  // namespace okannet
