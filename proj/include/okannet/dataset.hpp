#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "okannet/augment.hpp"
#include "okannet/tensor.hpp"

namespace okannet {

// One split on disk: <root>/<class>/image files, labels assigned by the
// lexicographic order of the class folder names.
struct DatasetIndex {
  struct Entry {
    std::filesystem::path path;
    int32_t label;
  };
  std::vector<Entry> samples;
  std::vector<std::string> class_names;
};

// Lists class folders and their png/jpg/jpeg files (by extension,
// case-insensitive), sorted for a stable order. Missing root or a root
// with no usable class folder raises DataError.
DatasetIndex scan_dataset(const std::filesystem::path& root);

struct LoadedDataset {
  std::vector<Tensor> images;  // each [3,S,S] in [0,1]
  std::vector<int32_t> labels;
  std::vector<std::string> class_names;
  int64_t image_size = 0;

  int64_t size() const { return static_cast<int64_t>(images.size()); }
};

// Decodes and conditions every indexed file to [3,size,size]. Image
// decoding runs in parallel; order matches the index.
LoadedDataset load_dataset(const std::filesystem::path& root, int64_t size);

struct Batch {
  Tensor images;  // [B,3,S,S]
  std::vector<int32_t> labels;
};

// Epoch-seeded batch order. Every epoch visits each sample exactly once;
// the last batch may be short. Shuffling is a permutation derived from
// (epoch_seed, epoch) only.
class BatchIterator {
 public:
  BatchIterator(int64_t dataset_size, int64_t batch_size, bool shuffle,
                uint64_t epoch_seed);

  std::vector<int64_t> order(int64_t epoch) const;
  int64_t batches_per_epoch() const;
  int64_t batch_size() const { return batch_size_; }
  int64_t dataset_size() const { return n_; }

 private:
  int64_t n_, batch_size_;
  bool shuffle_;
  uint64_t epoch_seed_;
};

// Stacks the given samples into one [B,3,S,S] batch. When `aug` is
// enabled, each sample is transformed with an rng seeded from
// (aug_seed, epoch, dataset index), so batches are reproducible and
// independent of assembly order.
Batch assemble_batch(const LoadedDataset& ds, std::span<const int64_t> indices,
                     const AugmentationConfig& aug, uint64_t aug_seed,
                     int64_t epoch);

// All batches of one epoch, mainly for tests and small datasets.
std::vector<Batch> epoch_batches(const LoadedDataset& ds,
                                 const BatchIterator& it, int64_t epoch,
                                 const AugmentationConfig& aug,
                                 uint64_t aug_seed);

}  // namespace okannet
