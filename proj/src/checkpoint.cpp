#include "svrt/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <limits>

#include "svrt/dataset.hpp"

namespace svrt::nn {

namespace {

template <class T>
void put(std::vector<std::uint8_t>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}

  template <class T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(bytes_[pos_ + i]) << (8 * i));
    pos_ += sizeof(T);
    return v;
  }
  std::string str(std::size_t n) {
    need(n, "tensor name");
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) throw FormatError(std::string("checkpoint truncated while reading ") + what, bytes_.size());
  }
  std::size_t pos() const { return pos_; }
  std::size_t size() const { return bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(std::span<const NamedTensor> tensors) {
  std::vector<std::uint8_t> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  out.push_back(kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    if (name.size() > std::numeric_limits<std::uint16_t>::max()) throw ConfigError("tensor name too long: " + name);
    if (t.rank() > 255) throw ShapeError("tensor rank above 255: " + name);
    put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    out.push_back(static_cast<std::uint8_t>(t.rank()));
    for (int d : t.shape()) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (Eigen::Index i = 0; i < t.size(); ++i) put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(t[i]));
  }
  return out;
}

std::vector<NamedTensor> decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  for (std::size_t i = 0; i < sizeof kCheckpointMagic; ++i) {
    if (i >= bytes.size()) throw FormatError("checkpoint truncated inside magic", bytes.size());
    if (bytes[i] != static_cast<std::uint8_t>(kCheckpointMagic[i])) throw FormatError("bad checkpoint magic", i);
  }
  r.str(sizeof kCheckpointMagic);
  const std::size_t version_at = r.pos();
  if (r.get<std::uint8_t>("version") != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version", version_at);
  const auto count = r.get<std::uint32_t>("tensor count");
  std::vector<NamedTensor> out;
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto len = r.get<std::uint16_t>("name length");
    std::string name = r.str(len);
    const auto rank = r.get<std::uint8_t>("rank");
    Shape shape;
    std::int64_t numel = 1;
    for (int i = 0; i < rank; ++i) {
      const std::size_t at = r.pos();
      const auto d = r.get<std::uint32_t>("dimension");
      if (d > static_cast<std::uint32_t>(std::numeric_limits<int>::max())) throw FormatError("dimension too large", at);
      shape.push_back(static_cast<int>(d));
      numel *= d;
    }
    if (numel < 0 || static_cast<std::uint64_t>(numel) * 4 > r.size() - r.pos())
      throw FormatError("checkpoint truncated while reading payload of " + name, bytes.size());
    Tensor<float> t(shape);
    for (std::int64_t i = 0; i < numel; ++i) t[i] = std::bit_cast<float>(r.get<std::uint32_t>("payload"));
    out.push_back({std::move(name), std::move(t)});
  }
  if (r.pos() != bytes.size()) throw FormatError("trailing bytes after checkpoint", r.pos());
  return out;
}

template <class S>
std::vector<NamedTensor> model_state(const Model<S>& model) {
  std::vector<NamedTensor> out;
  for (const auto& p : model.params()) out.push_back({p.name, p.tensor->template cast<float>()});
  return out;
}

template <class S>
void load_model_state(Model<S>& model, std::span<const NamedTensor> state, bool backbone_only) {
  for (const auto& p : model.params()) {
    if (backbone_only && !p.backbone) continue;
    const NamedTensor* found = nullptr;
    for (const auto& nt : state)
      if (nt.name == p.name) found = &nt;
    if (!found) throw ConfigError("checkpoint has no tensor named " + p.name);
    if (found->tensor.shape() != p.tensor->shape())
      throw ConfigError("checkpoint tensor " + p.name + " has shape " + shape_string(found->tensor.shape()) +
                        ", model expects " + shape_string(p.tensor->shape()));
    p.tensor->data() = found->tensor.data().template cast<S>();
  }
}

void save_checkpoint(const std::filesystem::path& path, std::span<const NamedTensor> tensors) {
  io::write_atomic(path, encode_checkpoint(tensors));
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(io::read_file(path));
}

template std::vector<NamedTensor> model_state(const Model<float>&);
template std::vector<NamedTensor> model_state(const Model<double>&);
template void load_model_state(Model<float>&, std::span<const NamedTensor>, bool);
template void load_model_state(Model<double>&, std::span<const NamedTensor>, bool);

}  // namespace svrt::nn
