#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "okannet/augment.hpp"
#include "okannet/dataset.hpp"
#include "okannet/image.hpp"
#include "okannet/preprocess.hpp"
#include "okannet/rng.hpp"
#include "okannet/tensor.hpp"
#include "support/testutil.hpp"

using namespace okannet;
using testutil::max_abs_diff;
using testutil::TempDir;

namespace {

Tensor lattice_image(int64_t c, int64_t h, int64_t w, uint64_t seed) {
  Tensor img(Shape{c, h, w});
  RandomEngine rng(seed);
  for (int64_t i = 0; i < img.size(); ++i)
    img[i] = static_cast<float>(rng.uniform_int(256)) / 255.0f;
  return img;
}

double cubic_kernel(double t) {
  const double a = -0.5;
  const double x = std::fabs(t);
  if (x <= 1.0) return (a + 2.0) * x * x * x - (a + 3.0) * x * x + 1.0;
  if (x < 2.0) return a * x * x * x - 5.0 * a * x * x + 8.0 * a * x - 4.0 * a;
  return 0.0;
}

// Direct per-pixel 4x4 tap evaluation; no tap tables, no separable passes.
Tensor resize_reference(const Tensor& img, int64_t oh, int64_t ow) {
  const int64_t c = img.shape()[0], ih = img.shape()[1], iw = img.shape()[2];
  const double sy = static_cast<double>(ih) / static_cast<double>(oh);
  const double sx = static_cast<double>(iw) / static_cast<double>(ow);
  Tensor out(Shape{c, oh, ow});
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t y = 0; y < oh; ++y)
      for (int64_t x = 0; x < ow; ++x) {
        const double srcy = (static_cast<double>(y) + 0.5) * sy - 0.5;
        const double srcx = (static_cast<double>(x) + 0.5) * sx - 0.5;
        const int64_t y0 = static_cast<int64_t>(std::floor(srcy));
        const int64_t x0 = static_cast<int64_t>(std::floor(srcx));
        double wy[4], wx[4], wys = 0.0, wxs = 0.0;
        for (int64_t k = 0; k < 4; ++k) {
          wy[k] = cubic_kernel(srcy - static_cast<double>(y0 - 1 + k));
          wx[k] = cubic_kernel(srcx - static_cast<double>(x0 - 1 + k));
          wys += wy[k];
          wxs += wx[k];
        }
        double acc = 0.0;
        for (int64_t ky = 0; ky < 4; ++ky)
          for (int64_t kx = 0; kx < 4; ++kx) {
            const int64_t yi =
                std::clamp<int64_t>(y0 - 1 + ky, 0, ih - 1);
            const int64_t xi =
                std::clamp<int64_t>(x0 - 1 + kx, 0, iw - 1);
            acc += (wy[ky] / wys) * (wx[kx] / wxs) *
                   static_cast<double>(img.at(ch, yi, xi));
          }
        out.at(ch, y, x) = static_cast<float>(acc);
      }
  return out;
}

// Writes <root>/<class>/<name> PNG files with distinct constant values.
void write_class_tree(const std::filesystem::path& root,
                      const std::vector<std::string>& classes,
                      int files_per_class) {
  for (size_t c = 0; c < classes.size(); ++c)
    for (int i = 0; i < files_per_class; ++i) {
      const auto dir = root / classes[c];
      std::filesystem::create_directories(dir);
      const float v = 0.1f * static_cast<float>(c + 1);
      write_png(dir / ("img" + std::to_string(i) + ".png"),
                Tensor(Shape{1, 6, 6}, v));
    }
}

}  // namespace

TEST_CASE("scan assigns labels by lexicographic folder order") {
  TempDir dir("scan");
  write_class_tree(dir.path(), {"zeta", "alpha"}, 3);
  const DatasetIndex idx = scan_dataset(dir.path());
  REQUIRE(idx.class_names.size() == 2);
  CHECK(idx.class_names[0] == "alpha");
  CHECK(idx.class_names[1] == "zeta");
  REQUIRE(idx.samples.size() == 6);
  for (const auto& s : idx.samples) {
    CHECK(std::filesystem::exists(s.path));
    const std::string folder = s.path.parent_path().filename().string();
    CHECK(s.label == (folder == "alpha" ? 0 : 1));
  }
  CHECK(std::is_sorted(idx.samples.begin(), idx.samples.end(),
                       [](const auto& a, const auto& b) {
                         return a.label < b.label ||
                                (a.label == b.label && a.path < b.path);
                       }));
}

TEST_CASE("scan orders the tumor class folders as ids 0 to 3") {
  TempDir dir("scan4");
  write_class_tree(dir.path(),
                   {"pituitary", "glioma", "notumor", "meningioma"}, 1);
  const DatasetIndex idx = scan_dataset(dir.path());
  const std::vector<std::string> expect{"glioma", "meningioma", "notumor",
                                        "pituitary"};
  CHECK(idx.class_names == expect);
}

TEST_CASE("scan rejects missing or empty roots") {
  TempDir dir("scanbad");
  CHECK_THROWS_WITH_AS(scan_dataset(dir.path() / "nope"),
                       doctest::Contains("folder not found"), DataError);
  std::filesystem::create_directories(dir.path() / "empty_root");
  CHECK_THROWS_AS(scan_dataset(dir.path() / "empty_root"), DataError);
  std::filesystem::create_directories(dir.path() / "noimg" / "classA");
  CHECK_THROWS_AS(scan_dataset(dir.path() / "noimg"), DataError);
}

TEST_CASE("png decode recovers exact 8 bit values") {
  TempDir dir("png");
  const auto white = dir.path() / "white.png";
  write_png(white, Tensor(Shape{1, 1, 1}, 1.0f));
  const Tensor w = decode_image(white);
  REQUIRE(w.shape() == Shape{1, 1, 1});
  CHECK(w[0] == 1.0f);

  const Tensor grid = lattice_image(3, 4, 5, 300);
  const auto rgb = dir.path() / "grid.png";
  write_png(rgb, grid);
  const Tensor back = decode_image(rgb);
  REQUIRE(back.shape() == grid.shape());
  CHECK(max_abs_diff(back, grid) < 1.0 / 255.0);
}

TEST_CASE("jpeg decode stays within lossy tolerance") {
  TempDir dir("jpeg");
  const auto black = dir.path() / "black.jpg";
  write_jpeg(black, Tensor(Shape{1, 2, 2}, 0.0f));
  const Tensor b = decode_image(black);
  REQUIRE(b.shape() == Shape{1, 2, 2});
  for (int64_t i = 0; i < b.size(); ++i) CHECK(b[i] <= 1.0f / 255.0f);

  const Tensor flat(Shape{3, 8, 8}, 0.5f);
  const auto gray = dir.path() / "flat.jpg";
  write_jpeg(gray, flat, 95);
  const Tensor back = decode_image(gray);
  REQUIRE(back.shape() == flat.shape());
  CHECK(max_abs_diff(back, flat) < 2.0 / 255.0);
}

TEST_CASE("decode rejects non-image bytes and names the file") {
  TempDir dir("corrupt");
  const auto bad = dir.path() / "fake.png";
  std::ofstream(bad) << "this is not an image";
  CHECK_THROWS_WITH_AS(decode_image(bad), doctest::Contains("fake.png"),
                       DecodeError);
  CHECK_THROWS_AS(decode_image(dir.path() / "absent.png"), DecodeError);
}

TEST_CASE("resize at identity scale returns the image") {
  const Tensor img = lattice_image(3, 6, 6, 301);
  const Tensor out = resize_bicubic(img, 6, 6);
  CHECK(max_abs_diff(out, img) < 1e-6);
}

TEST_CASE("resize keeps constant images constant") {
  const Tensor img(Shape{1, 3, 5}, 0.4375f);
  const Tensor up = resize_bicubic(img, 9, 9);
  const Tensor down = resize_bicubic(Tensor(Shape{1, 8, 8}, 0.4375f), 3, 3);
  for (int64_t i = 0; i < up.size(); ++i) CHECK(up[i] == 0.4375f);
  for (int64_t i = 0; i < down.size(); ++i) CHECK(down[i] == 0.4375f);
}

TEST_CASE("resize matches a direct tap evaluation oracle") {
  Tensor ramp(Shape{1, 4, 4});
  for (int64_t i = 0; i < 16; ++i)
    ramp[i] = static_cast<float>(i) / 15.0f;
  const Tensor up = resize_bicubic(ramp, 8, 8);
  CHECK(max_abs_diff(up, resize_reference(ramp, 8, 8)) < 1e-6);

  const Tensor img = lattice_image(3, 7, 5, 302);
  CHECK(max_abs_diff(resize_bicubic(img, 12, 9),
                     resize_reference(img, 12, 9)) < 1e-6);
  CHECK(max_abs_diff(resize_bicubic(img, 3, 4),
                     resize_reference(img, 3, 4)) < 1e-6);
}

TEST_CASE("gray to rgb replicates one channel three times") {
  Tensor gray(Shape{1, 1, 1}, 0.6f);
  const Tensor rgb = gray_to_rgb(gray);
  REQUIRE(rgb.shape() == Shape{3, 1, 1});
  for (int64_t c = 0; c < 3; ++c) CHECK(rgb[c] == 0.6f);

  const Tensor color = lattice_image(3, 4, 4, 303);
  CHECK(gray_to_rgb(color) == color);

  const Tensor g2 = lattice_image(1, 5, 3, 304);
  const Tensor r2 = gray_to_rgb(g2);
  for (int64_t i = 0; i < g2.size(); ++i) {
    CHECK(r2[i] == g2[i]);
    CHECK(r2[i + g2.size()] == g2[i]);
    CHECK(r2[i + 2 * g2.size()] == g2[i]);
  }

  CHECK_THROWS_AS(gray_to_rgb(Tensor(Shape{2, 4, 4})), ShapeError);
}

TEST_CASE("preprocess emits clamped three channel squares") {
  const Tensor big = lattice_image(1, 30, 22, 305);
  const Tensor out = preprocess_image(big, 16);
  REQUIRE(out.shape() == Shape{3, 16, 16});
  for (int64_t i = 0; i < out.size(); ++i) {
    CHECK(out[i] >= 0.0f);
    CHECK(out[i] <= 1.0f);
  }
}

TEST_CASE("disabled augmentation returns the sample untouched") {
  ImageSample s{lattice_image(3, 8, 8, 310), 2};
  AugmentationConfig off;
  RandomEngine rng(9);
  const ImageSample out = augment(s, off, rng);
  CHECK(out.pixels == s.pixels);
  CHECK(out.label == 2);
  RandomEngine fresh(9);
  CHECK(rng.next_u64() == fresh.next_u64());
}

TEST_CASE("horizontal flip is an involution") {
  const Tensor img = lattice_image(3, 6, 7, 311);
  CHECK(flip_horizontal(flip_horizontal(img)) == img);
  const Tensor f = flip_horizontal(img);
  for (int64_t c = 0; c < 3; ++c)
    for (int64_t i = 0; i < 6; ++i)
      for (int64_t j = 0; j < 7; ++j)
        CHECK(f.at(c, i, j) == img.at(c, i, 6 - j));
}

TEST_CASE("forced flip twice with zero warp recovers the image") {
  ImageSample s{lattice_image(3, 9, 9, 312), 1};
  AugmentationConfig cfg;
  cfg.enabled = true;
  cfg.hflip_prob = 1.0;
  cfg.rotation_deg = 0.0;
  cfg.translate_frac = 0.0;
  RandomEngine rng(13);
  const ImageSample once = augment(s, cfg, rng);
  const ImageSample twice = augment(once, cfg, rng);
  CHECK(max_abs_diff(twice.pixels, s.pixels) < 1e-6);
  CHECK(max_abs_diff(once.pixels, flip_horizontal(s.pixels)) < 1e-6);
}

TEST_CASE("zero rotation and translation leave the image unchanged") {
  const Tensor img = lattice_image(3, 8, 8, 313);
  CHECK(max_abs_diff(rotate(img, 0.0), img) < 1e-6);
  CHECK(max_abs_diff(translate(img, 0.0, 0.0), img) < 1e-6);

  ImageSample s{img, 0};
  AugmentationConfig cfg;
  cfg.enabled = true;
  cfg.hflip_prob = 0.0;
  cfg.rotation_deg = 0.0;
  cfg.translate_frac = 0.0;
  RandomEngine rng(14);
  CHECK(max_abs_diff(augment(s, cfg, rng).pixels, img) < 1e-6);
}

TEST_CASE("translate shifts content with zero fill") {
  const Tensor img = lattice_image(1, 4, 4, 314);
  const Tensor right = translate(img, 1.0, 0.0);
  for (int64_t i = 0; i < 4; ++i) {
    CHECK(right.at(0, i, 0) == 0.0f);
    for (int64_t j = 1; j < 4; ++j)
      CHECK(right.at(0, i, j) == doctest::Approx(img.at(0, i, j - 1)));
  }
  const Tensor down = translate(img, 0.0, 2.0);
  for (int64_t j = 0; j < 4; ++j) {
    CHECK(down.at(0, 0, j) == 0.0f);
    CHECK(down.at(0, 1, j) == 0.0f);
    for (int64_t i = 2; i < 4; ++i)
      CHECK(down.at(0, i, j) == doctest::Approx(img.at(0, i - 2, j)));
  }
}

TEST_CASE("rotation keeps the center pixel fixed") {
  Tensor img(Shape{1, 5, 5}, 0.0f);
  img.at(0, 2, 2) = 1.0f;
  for (double deg : {15.0, 45.0, 90.0, -30.0}) {
    const Tensor r = rotate(img, deg);
    CHECK(r.at(0, 2, 2) == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("augmentation is deterministic for a fixed rng seed") {
  ImageSample s{lattice_image(3, 10, 10, 315), 3};
  AugmentationConfig cfg;
  cfg.enabled = true;
  RandomEngine a(55), b(55), c(56);
  const ImageSample out_a = augment(s, cfg, a);
  const ImageSample out_b = augment(s, cfg, b);
  const ImageSample out_c = augment(s, cfg, c);
  CHECK(out_a.pixels == out_b.pixels);
  CHECK(out_a.label == 3);
  CHECK_FALSE(out_a.pixels == out_c.pixels);
}

TEST_CASE("load dataset conditions every file to the target shape") {
  TempDir dir("load");
  const auto root = dir.path();
  std::filesystem::create_directories(root / "first");
  std::filesystem::create_directories(root / "second");
  write_png(root / "first" / "a.png", lattice_image(1, 10, 8, 320));
  write_png(root / "first" / "b.png", lattice_image(3, 12, 12, 321));
  write_jpeg(root / "first" / "c.jpg", lattice_image(3, 9, 14, 322));
  write_png(root / "second" / "a.png", lattice_image(1, 16, 16, 323));
  write_jpeg(root / "second" / "b.jpeg", lattice_image(1, 7, 7, 324));

  const LoadedDataset ds = load_dataset(root, 16);
  REQUIRE(ds.size() == 5);
  CHECK(ds.image_size == 16);
  CHECK(ds.class_names == std::vector<std::string>{"first", "second"});
  const std::vector<int32_t> expect_labels{0, 0, 0, 1, 1};
  CHECK(ds.labels == expect_labels);
  for (const Tensor& t : ds.images) {
    REQUIRE(t.shape() == Shape{3, 16, 16});
    for (int64_t i = 0; i < t.size(); ++i) {
      CHECK(t[i] >= 0.0f);
      CHECK(t[i] <= 1.0f);
    }
  }

  const LoadedDataset again = load_dataset(root, 16);
  for (int64_t i = 0; i < ds.size(); ++i)
    CHECK(ds.images[static_cast<size_t>(i)] ==
          again.images[static_cast<size_t>(i)]);
}

TEST_CASE("epoch batches cover the dataset with a trailing short batch") {
  LoadedDataset ds;
  ds.image_size = 4;
  ds.class_names = {"a", "b"};
  for (int i = 0; i < 5; ++i) {
    ds.images.push_back(lattice_image(3, 4, 4, 330 + i));
    ds.labels.push_back(static_cast<int32_t>(i % 2));
  }
  BatchIterator it(ds.size(), 2, true, 99);
  CHECK(it.batches_per_epoch() == 3);
  const std::vector<Batch> batches =
      epoch_batches(ds, it, 0, AugmentationConfig{}, 0);
  REQUIRE(batches.size() == 3);
  CHECK(batches[0].images.shape()[0] == 2);
  CHECK(batches[1].images.shape()[0] == 2);
  CHECK(batches[2].images.shape()[0] == 1);

  std::multiset<int32_t> seen;
  for (const Batch& b : batches)
    for (int32_t y : b.labels) seen.insert(y);
  const std::multiset<int32_t> expect(ds.labels.begin(), ds.labels.end());
  CHECK(seen == expect);
}

TEST_CASE("batch order depends only on seed and epoch") {
  BatchIterator a(64, 8, true, 4242), b(64, 8, true, 4242),
      c(64, 8, true, 4243);
  CHECK(a.order(0) == b.order(0));
  CHECK(a.order(3) == b.order(3));
  CHECK_FALSE(a.order(0) == a.order(1));
  CHECK_FALSE(a.order(0) == c.order(0));

  std::vector<int64_t> sorted = a.order(5);
  std::sort(sorted.begin(), sorted.end());
  for (int64_t i = 0; i < 64; ++i) CHECK(sorted[static_cast<size_t>(i)] == i);

  BatchIterator plain(10, 4, false, 7);
  const std::vector<int64_t> id = plain.order(2);
  for (int64_t i = 0; i < 10; ++i) CHECK(id[static_cast<size_t>(i)] == i);
}

TEST_CASE("augmented batches are reproducible per sample and epoch") {
  LoadedDataset ds;
  ds.image_size = 8;
  ds.class_names = {"only"};
  for (int i = 0; i < 4; ++i) {
    ds.images.push_back(lattice_image(3, 8, 8, 340 + i));
    ds.labels.push_back(0);
  }
  AugmentationConfig aug;
  aug.enabled = true;
  const std::vector<int64_t> idx{0, 1, 2, 3};
  const Batch a = assemble_batch(ds, idx, aug, 77, 0);
  const Batch b = assemble_batch(ds, idx, aug, 77, 0);
  CHECK(a.images == b.images);
  const Batch other_epoch = assemble_batch(ds, idx, aug, 77, 1);
  CHECK_FALSE(a.images == other_epoch.images);
  const Batch other_seed = assemble_batch(ds, idx, aug, 78, 0);
  CHECK_FALSE(a.images == other_seed.images);

  // Order independence: the same sample augmented alone matches its row
  // inside the full batch.
  const std::vector<int64_t> single{2};
  const Batch lone = assemble_batch(ds, single, aug, 77, 0);
  Tensor row(Shape{1, 3, 8, 8});
  const int64_t stride = 3 * 8 * 8;
  std::copy(a.images.data() + 2 * stride, a.images.data() + 3 * stride,
            row.data());
  CHECK(lone.images == row);
}
