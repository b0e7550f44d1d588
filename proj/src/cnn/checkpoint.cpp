#include <bit>
#include <cmath>
#include <limits>
#include <cstring>
#include <fstream>
#include <iterator>

#include "dcam/cnn.hpp"
#include "dcam/error.hpp"
#include "json.hpp"

namespace dcam {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'D', 'C', 'A', 'M'};

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_tensor(std::string& out, const nn::Shape& s, std::span<const float> data) {
  for (int d : {s.n, s.c, s.h, s.w}) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  for (float v : data) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
}

json net_to_json(const NetConfig& c) {
  return {{"base_width", c.base_width},   {"input_channels", c.input_channels},
          {"output_channels", c.output_channels}, {"leaky_alpha", c.leaky_alpha},
          {"dog_sigma1", c.dog_sigma1},   {"dog_sigma2", c.dog_sigma2},
          {"alpha_loss", c.alpha_loss},   {"init_scale", c.init_scale},
          {"dog_on_prediction", c.dog_on_prediction}, {"bn_momentum", c.bn_momentum},
          {"bn_eps", c.bn_eps}};
}

NetConfig net_from_json(const json& j) {
  NetConfig c;
  c.base_width = j.at("base_width").get<int>();
  c.input_channels = j.at("input_channels").get<int>();
  c.output_channels = j.at("output_channels").get<int>();
  c.leaky_alpha = j.at("leaky_alpha").get<double>();
  c.dog_sigma1 = j.at("dog_sigma1").get<double>();
  c.dog_sigma2 = j.at("dog_sigma2").get<double>();
  c.alpha_loss = j.at("alpha_loss").get<double>();
  c.init_scale = j.at("init_scale").get<double>();
  c.dog_on_prediction = j.at("dog_on_prediction").get<bool>();
  c.bn_momentum = j.at("bn_momentum").get<double>();
  c.bn_eps = j.at("bn_eps").get<double>();
  return c;
}

// JSON has no infinity; an untouched best loss is stored as null.
json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double from_nullable(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

class Reader {
 public:
  Reader(std::string bytes, std::string path) : bytes_(std::move(bytes)), path_(std::move(path)) {}

  template <class U>
  U get() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return v;
  }

  std::string text(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void tensor(const std::string& what, const nn::Shape& expected, std::span<float> dst) {
    nn::Shape s;
    s.n = static_cast<int>(get<std::uint32_t>());
    s.c = static_cast<int>(get<std::uint32_t>());
    s.h = static_cast<int>(get<std::uint32_t>());
    s.w = static_cast<int>(get<std::uint32_t>());
    if (!(s == expected)) {
      throw CheckpointFormatError(path_ + ": tensor " + what + " has shape " + nn::to_string(s) + ", expected " +
                                  nn::to_string(expected));
    }
    need(dst.size() * 4);
    for (float& v : dst) v = std::bit_cast<float>(get<std::uint32_t>());
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw CheckpointTruncatedError(path_ + ": file ends at byte " + std::to_string(bytes_.size()) +
                                     ", needed " + std::to_string(pos_ + n));
    }
  }

  std::string bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

nn::Shape channel_shape(int c) { return nn::Shape{1, c, 1, 1}; }

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const DeepCameraNet<float>& net, const TrainState* state) {
  json header{{"net", net_to_json(net.config())}};
  const auto params = net.parameters();
  const bool has_adam = state && !state->adam.m.empty();
  if (state) {
    header["train"] = {{"epoch", state->epoch},
                       {"lr", state->lr},
                       {"best_val", finite_or_null(state->best_val)},
                       {"schedule_best", finite_or_null(state->schedule_best)},
                       {"bad_epochs", state->bad_epochs},
                       {"adam_step", state->adam.step},
                       {"adam_beta1", state->adam.options.beta1},
                       {"adam_beta2", state->adam.options.beta2},
                       {"adam_eps", state->adam.options.eps},
                       {"has_adam", has_adam}};
  }
  const std::string text = header.dump();

  std::string out(kMagic, 4);
  put_le<std::uint16_t>(out, kCheckpointVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  for (const auto& p : params) put_tensor(out, p.shape(), p.data());
  for (const auto& b : net.batch_norms()) {
    put_tensor(out, channel_shape(b.state.channels()), b.state.running_mean);
    put_tensor(out, channel_shape(b.state.channels()), b.state.running_var);
  }
  if (has_adam) {
    if (state->adam.m.size() != params.size()) throw ShapeError("checkpoint: Adam state does not match parameters");
    for (std::size_t i = 0; i < params.size(); ++i) put_tensor(out, params[i].shape(), state->adam.m[i]);
    for (std::size_t i = 0; i < params.size(); ++i) put_tensor(out, params[i].shape(), state->adam.v[i]);
  }

  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw IoError("cannot write " + tmp.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const std::string where = path.string();
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    if (bytes.size() < 4 && std::string(kMagic, 4).compare(0, bytes.size(), bytes) == 0 && !bytes.empty()) {
      throw CheckpointTruncatedError(where + ": file ends inside the magic");
    }
    throw CheckpointFormatError(where + ": not a checkpoint (bad magic)");
  }
  Reader r(std::move(bytes), where);
  r.text(4);
  const auto version = r.get<std::uint16_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointVersionError(where + ": format version " + std::to_string(version) + ", this build reads " +
                                 std::to_string(kCheckpointVersion));
  }
  const auto len = r.get<std::uint32_t>();
  json header;
  NetConfig cfg;
  try {
    header = json::parse(r.text(len));
    cfg = net_from_json(header.at("net"));
    cfg.validate();
  } catch (const json::exception& e) {
    throw CheckpointFormatError(where + ": bad header: " + e.what());
  } catch (const InvalidArgumentError& e) {
    throw CheckpointFormatError(where + ": bad network config: " + e.what());
  }

  Checkpoint ck{DeepCameraNet<float>(cfg, 0), std::nullopt};
  auto params = ck.net.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) r.tensor("param " + std::to_string(i), params[i].shape(), params[i].data());
  for (auto& b : ck.net.batch_norms()) {
    r.tensor(b.name + ".running_mean", channel_shape(b.state.channels()), b.state.running_mean);
    r.tensor(b.name + ".running_var", channel_shape(b.state.channels()), b.state.running_var);
  }
  if (header.contains("train")) {
    TrainState st;
    bool has_adam = false;
    try {
      const auto& t = header.at("train");
      st.epoch = t.at("epoch").get<int>();
      st.lr = t.at("lr").get<double>();
      st.best_val = from_nullable(t.at("best_val"));
      st.schedule_best = from_nullable(t.at("schedule_best"));
      st.bad_epochs = t.at("bad_epochs").get<int>();
      st.adam.step = t.at("adam_step").get<std::int64_t>();
      st.adam.options = {t.at("adam_beta1").get<double>(), t.at("adam_beta2").get<double>(),
                         t.at("adam_eps").get<double>()};
      has_adam = t.at("has_adam").get<bool>();
    } catch (const json::exception& e) {
      throw CheckpointFormatError(where + ": bad training state: " + e.what());
    }
    if (has_adam) {
      for (auto* buf : {&st.adam.m, &st.adam.v}) {
        for (std::size_t i = 0; i < params.size(); ++i) {
          buf->emplace_back(params[i].numel());
          r.tensor("adam moment " + std::to_string(i), params[i].shape(), buf->back());
        }
      }
    }
    ck.state = std::move(st);
  }
  if (!r.at_end()) throw CheckpointFormatError(where + ": trailing bytes after the last tensor");
  return ck;
}

}  // namespace dcam
