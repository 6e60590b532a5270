#include "svrt/dataset.hpp"

#include <cstring>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "svrt/common.hpp"

namespace svrt {

std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[i] = kDigits[v & 0xF];
  return s;
}

}  // namespace svrt

namespace svrt::io {

namespace {

template <class T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}

  template <class T>
  T le() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(bytes_[pos_ + i]) << (8 * i));
    pos_ += sizeof(T);
    return v;
  }

  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("truncated SVRT1 stream", bytes_.size());
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string_view split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw std::invalid_argument("unknown split '" + std::string(s) + "'");
}

std::vector<std::uint8_t> pack(const Dataset& ds) {
  const std::size_t px = static_cast<std::size_t>(ds.height) * ds.width;
  std::vector<std::uint8_t> out;
  out.reserve(kPackHeaderBytes + ds.samples.size() * (1 + px));
  out.insert(out.end(), std::begin(kPackMagic), std::end(kPackMagic));
  out.push_back(kPackVersion);
  put_le(out, static_cast<std::uint16_t>(ds.task_id));
  put_le(out, static_cast<std::uint32_t>(ds.samples.size()));
  put_le(out, static_cast<std::uint16_t>(ds.height));
  put_le(out, static_cast<std::uint16_t>(ds.width));
  for (const auto& s : ds.samples) {
    if (s.image.width != ds.width || s.image.height != ds.height)
      throw std::invalid_argument("pack: sample size differs from dataset size");
    out.push_back(s.label);
    out.insert(out.end(), s.image.pixels.begin(), s.image.pixels.end());
  }
  return out;
}

Dataset unpack(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto magic = r.take(5);
  for (std::size_t i = 0; i < 5; ++i)
    if (magic[i] != static_cast<std::uint8_t>(kPackMagic[i])) throw FormatError("bad magic", i);
  if (r.le<std::uint8_t>() != kPackVersion) throw FormatError("unsupported version", 5);
  Dataset ds;
  ds.task_id = r.le<std::uint16_t>();
  const auto count = r.le<std::uint32_t>();
  ds.height = r.le<std::uint16_t>();
  ds.width = r.le<std::uint16_t>();
  const std::size_t px = static_cast<std::size_t>(ds.height) * ds.width;
  ds.samples.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Sample s;
    const std::size_t at = r.pos();
    s.label = r.le<std::uint8_t>();
    if (s.label > 1) throw FormatError("label must be 0 or 1", at);
    const auto pix = r.take(px);
    s.image = Image(ds.width, ds.height);
    std::memcpy(s.image.pixels.data(), pix.data(), px);
    ds.samples.push_back(std::move(s));
  }
  if (r.pos() != bytes.size()) throw FormatError("trailing bytes after last sample", r.pos());
  return ds;
}

std::string DatasetManifest::to_text() const {
  std::ostringstream os;
  os << "task_id=" << task_id << "\n"
     << "split=" << split_name(split) << "\n"
     << "count=" << count << "\n"
     << "seed=" << seed << "\n"
     << "generator_version=" << generator_version << "\n"
     << "checksum=" << hex64(checksum) << "\n";
  return os.str();
}

DatasetManifest DatasetManifest::parse(std::string_view text) {
  DatasetManifest m;
  std::istringstream is{std::string(text)};
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("manifest line without '=': " + line);
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "task_id") m.task_id = std::stoi(val);
    else if (key == "split") m.split = parse_split(val);
    else if (key == "count") m.count = static_cast<std::uint32_t>(std::stoul(val));
    else if (key == "seed") m.seed = std::stoull(val);
    else if (key == "generator_version") m.generator_version = val;
    else if (key == "checksum") m.checksum = std::stoull(val, nullptr, 16);
    else throw DataError("unknown manifest key: " + key);
  }
  return m;
}

std::uint64_t sample_seed(std::uint64_t seed, Split split, std::uint64_t index) {
  return child_seed(child_seed(seed, 0x5e11u + static_cast<std::uint64_t>(split)), index);
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(n, threads > 0 ? threads : 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex mu;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < n; i += workers) fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
        }
      });
  }
  if (failure) std::rethrow_exception(failure);
}

Dataset generate(int task_id, Split split, std::uint32_t count, std::uint64_t seed, int threads) {
  tasks::task_spec(task_id);
  if (count % 2 != 0) throw std::invalid_argument("dataset count must be even (class balance)");
  Dataset ds;
  ds.task_id = task_id;
  ds.samples.resize(count);
  parallel_for(count, threads, [&](std::size_t i) {
    const int label = static_cast<int>(i % 2);
    const auto scene = tasks::sample_scene(task_id, label, sample_seed(seed, split, i));
    ds.samples[i] = Sample{static_cast<std::uint8_t>(label), rasterize(scene, tasks::kFrame)};
  });
  return ds;
}

DatasetManifest manifest_for(const Dataset& ds, Split split, std::uint64_t seed,
                             std::span<const std::uint8_t> packed) {
  DatasetManifest m;
  m.task_id = ds.task_id;
  m.split = split;
  m.count = static_cast<std::uint32_t>(ds.samples.size());
  m.seed = seed;
  m.checksum = fnv1a64(packed);
  return m;
}

void write_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open " + tmp.string());
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw Error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_atomic(const std::filesystem::path& path, std::string_view text) {
  write_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

}  // namespace svrt::io
