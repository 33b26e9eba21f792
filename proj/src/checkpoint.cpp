#include "okannet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "okannet/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace okannet {

namespace {

constexpr char kMagic[4] = {'O', 'K', 'N', 'T'};
constexpr uint32_t kVersion = 1;

using json = nlohmann::json;

json config_to_json(const TrainConfig& cfg) {
  return json{
      {"epochs", cfg.epochs},
      {"batch_size", cfg.batch_size},
      {"learning_rate", cfg.learning_rate},
      {"validation_frequency", cfg.validation_frequency},
      {"seed", cfg.seed},
      {"image_size", cfg.image_size},
      {"augmentation",
       {{"enabled", cfg.augmentation.enabled},
        {"hflip_prob", cfg.augmentation.hflip_prob},
        {"rotation_deg", cfg.augmentation.rotation_deg},
        {"translate_frac", cfg.augmentation.translate_frac},
        {"rng_seed", cfg.augmentation.rng_seed}}},
  };
}

TrainConfig config_from_json(const json& j) {
  TrainConfig cfg;
  cfg.epochs = j.at("epochs").get<int64_t>();
  cfg.batch_size = j.at("batch_size").get<int64_t>();
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.validation_frequency = j.at("validation_frequency").get<int64_t>();
  cfg.seed = j.at("seed").get<uint64_t>();
  cfg.image_size = j.at("image_size").get<int64_t>();
  const json& a = j.at("augmentation");
  cfg.augmentation.enabled = a.at("enabled").get<bool>();
  cfg.augmentation.hflip_prob = a.at("hflip_prob").get<double>();
  cfg.augmentation.rotation_deg = a.at("rotation_deg").get<double>();
  cfg.augmentation.translate_frac = a.at("translate_frac").get<double>();
  cfg.augmentation.rng_seed = a.at("rng_seed").get<uint64_t>();
  return cfg;
}

json meta_to_json(const CheckpointMeta& meta) {
  return json{
      {"config", config_to_json(meta.config)},
      {"class_names", meta.class_names},
      {"final_metrics",
       {{"accuracy", meta.final_metrics.accuracy},
        {"precision", meta.final_metrics.macro_precision},
        {"recall", meta.final_metrics.macro_recall},
        {"f1", meta.final_metrics.f1},
        {"training_time_s", meta.final_metrics.training_time_s}}},
      {"wall_seconds", meta.wall_seconds},
  };
}

CheckpointMeta meta_from_json(const json& j) {
  CheckpointMeta meta;
  meta.config = config_from_json(j.at("config"));
  meta.class_names = j.at("class_names").get<std::vector<std::string>>();
  const json& m = j.at("final_metrics");
  meta.final_metrics.accuracy = m.at("accuracy").get<double>();
  meta.final_metrics.macro_precision = m.at("precision").get<double>();
  meta.final_metrics.macro_recall = m.at("recall").get<double>();
  meta.final_metrics.f1 = m.at("f1").get<double>();
  meta.final_metrics.training_time_s =
      m.at("training_time_s").get<double>();
  meta.wall_seconds = j.at("wall_seconds").get<double>();
  return meta;
}

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path)
      : path_(path), f_(path, std::ios::binary) {
    if (!f_) throw IoError("cannot open " + path.string() + " for writing");
  }

  void bytes(const void* p, size_t n) {
    f_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!f_) throw IoError("failed writing " + path_.string());
  }

  void u8(uint8_t v) { bytes(&v, 1); }
  void u32(uint32_t v) { bytes(&v, 4); }
  void u64(uint64_t v) { bytes(&v, 8); }
  void f64(double v) { bytes(&v, 8); }

  void tensor(const Tensor& t) {
    u32(static_cast<uint32_t>(t.shape().rank()));
    for (int64_t d : t.shape().dims()) u32(static_cast<uint32_t>(d));
    bytes(t.data(), static_cast<size_t>(t.size()) * sizeof(float));
  }

  void close() {
    f_.close();
    if (!f_) throw IoError("failed writing " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream f_;
};

class Reader {
 public:
  Reader(std::vector<char> data, const std::filesystem::path& path)
      : data_(std::move(data)), path_(path) {}

  void bytes(void* p, size_t n) {
    if (pos_ + n > data_.size())
      throw IoError("truncated checkpoint " + path_.string());
    std::memcpy(p, data_.data() + pos_, n);
    pos_ += n;
  }

  uint8_t u8() {
    uint8_t v;
    bytes(&v, 1);
    return v;
  }
  uint32_t u32() {
    uint32_t v;
    bytes(&v, 4);
    return v;
  }
  uint64_t u64() {
    uint64_t v;
    bytes(&v, 8);
    return v;
  }
  double f64() {
    double v;
    bytes(&v, 8);
    return v;
  }

  void tensor_into(Tensor& t) {
    const uint32_t rank = u32();
    std::vector<int64_t> dims(rank);
    for (uint32_t i = 0; i < rank; ++i) dims[i] = u32();
    if (rank == 0 || Shape(dims) != t.shape())
      throw IoError("checkpoint tensor shape mismatch in " + path_.string());
    bytes(t.data(), static_cast<size_t>(t.size()) * sizeof(float));
  }

  size_t remaining() const { return data_.size() - pos_; }

 private:
  std::vector<char> data_;
  std::filesystem::path path_;
  size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(Model<float>& model, const CheckpointMeta& meta,
                     const std::filesystem::path& path) {
  Writer w(path);
  w.bytes(kMagic, 4);
  w.u32(kVersion);
  const ModelSpec& spec = model.spec();
  w.u32(static_cast<uint32_t>(spec.num_classes));
  w.u32(static_cast<uint32_t>(spec.image_size));
  w.u32(static_cast<uint32_t>(spec.layers.size()));
  for (const LayerSpec& ls : spec.layers) {
    w.u8(static_cast<uint8_t>(ls.kind));
    w.u32(static_cast<uint32_t>(ls.a));
    w.u32(static_cast<uint32_t>(ls.b));
    w.f64(ls.rate);
  }
  const auto params = model.params();
  const auto buffers = model.buffers();
  w.u32(static_cast<uint32_t>(params.size() + buffers.size()));
  for (const auto& p : params) w.tensor(*p.value);
  for (const auto& b : buffers) w.tensor(*b.value);
  const std::string meta_text = meta_to_json(meta).dump();
  w.u64(meta_text.size());
  w.bytes(meta_text.data(), meta_text.size());
  w.close();
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint " + path.string());
  std::vector<char> data((std::istreambuf_iterator<char>(f)),
                         std::istreambuf_iterator<char>());
  Reader r(std::move(data), path);

  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw IoError("not a checkpoint (bad magic): " + path.string());
  const uint32_t version = r.u32();
  if (version != kVersion)
    throw IoError("unsupported checkpoint version " +
                  std::to_string(version) + " in " + path.string());

  ModelSpec spec;
  spec.num_classes = r.u32();
  spec.image_size = r.u32();
  const uint32_t layer_count = r.u32();
  for (uint32_t i = 0; i < layer_count; ++i) {
    LayerSpec ls;
    ls.kind = static_cast<LayerKind>(r.u8());
    ls.a = r.u32();
    ls.b = r.u32();
    ls.rate = r.f64();
    spec.layers.push_back(ls);
  }

  Checkpoint out;
  try {
    out.model = Model<float>::build(spec, 0);
  } catch (const Error& e) {
    throw IoError("corrupt checkpoint model spec in " + path.string() +
                  ": " + e.what());
  }
  const uint32_t tensor_count = r.u32();
  const auto params = out.model.params();
  const auto buffers = out.model.buffers();
  if (tensor_count != params.size() + buffers.size())
    throw IoError("checkpoint tensor count mismatch in " + path.string());
  for (const auto& p : params) r.tensor_into(*p.value);
  for (const auto& b : buffers) r.tensor_into(*b.value);

  const uint64_t meta_len = r.u64();
  if (meta_len > r.remaining())
    throw IoError("truncated checkpoint " + path.string());
  std::string meta_text(meta_len, '\0');
  r.bytes(meta_text.data(), meta_text.size());
  try {
    out.meta = meta_from_json(json::parse(meta_text));
  } catch (const json::exception& e) {
    throw IoError("corrupt checkpoint metadata in " + path.string() + ": " +
                  e.what());
  }
  return out;
}

}  // namespace okannet
