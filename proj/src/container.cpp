#include "promforge/container.hpp"

#include "promforge/errors.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace promforge::io {

static_assert(std::endian::native == std::endian::little, "the container format assumes a little-endian host");

using nlohmann::json;

namespace {

template <class T>
void put_raw(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

struct Reader {
  const std::string& s;
  std::size_t pos = 0;

  template <class T>
  T get(const char* what) {
    if (s.size() - pos < sizeof(T)) throw Error(ErrorCode::kCorruptFile, std::string("truncated file while reading ") + what);
    T v;
    std::memcpy(&v, s.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
  }
  std::string bytes(std::uint64_t n, const char* what) {
    if (s.size() - pos < n) throw Error(ErrorCode::kCorruptFile, std::string("truncated file while reading ") + what);
    std::string out = s.substr(pos, n);
    pos += n;
    return out;
  }
};

}  // namespace

std::uint64_t fnv1a(const char* data, std::size_t n) {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 1099511628211ULL;
  }
  return h;
}

void Container::put(const std::string& name, const Eigen::MatrixXd& a) {
  Array arr;
  arr.shape = {a.rows(), a.cols()};
  arr.data.resize(a.size());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) arr.data[i * a.cols() + j] = a(i, j);
  arrays_[name] = std::move(arr);
}

void Container::put(const std::string& name, const Eigen::VectorXd& v) {
  Array arr;
  arr.shape = {v.size()};
  arr.data.assign(v.data(), v.data() + v.size());
  arrays_[name] = std::move(arr);
}

void Container::put(const std::string& name, const std::vector<int>& v) {
  Array arr;
  arr.shape = {static_cast<std::int64_t>(v.size())};
  arr.data.assign(v.begin(), v.end());
  arrays_[name] = std::move(arr);
}

Eigen::MatrixXd Container::matrix(const std::string& name) const {
  auto it = arrays_.find(name);
  require(it != arrays_.end(), "container: missing array '" + name + "'", ErrorCode::kCorruptFile);
  const Array& a = it->second;
  const std::int64_t r = a.shape[0], c = a.shape.size() > 1 ? a.shape[1] : 1;
  Eigen::MatrixXd m(r, c);
  for (std::int64_t i = 0; i < r; ++i)
    for (std::int64_t j = 0; j < c; ++j) m(i, j) = a.data[i * c + j];
  return m;
}

Eigen::VectorXd Container::vector(const std::string& name) const {
  auto it = arrays_.find(name);
  require(it != arrays_.end(), "container: missing array '" + name + "'", ErrorCode::kCorruptFile);
  return Eigen::Map<const Eigen::VectorXd>(it->second.data.data(), it->second.data.size());
}

std::vector<int> Container::ints(const std::string& name) const {
  const Eigen::VectorXd v = vector(name);
  std::vector<int> out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = static_cast<int>(std::lround(v[i]));
  return out;
}

std::vector<std::string> Container::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : arrays_) out.push_back(k);
  return out;
}

std::string Container::serialize() const {
  json manifest;
  manifest["meta"] = meta;
  json table = json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, a] : arrays_) {
    table.push_back({{"name", name}, {"shape", a.shape}, {"offset", offset}});
    offset += a.data.size() * sizeof(double);
  }
  manifest["arrays"] = table;
  const std::string mtext = manifest.dump();

  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put_raw<std::uint32_t>(out, kFormatVersion);
  put_raw<std::uint32_t>(out, 0);
  put_raw<std::uint64_t>(out, mtext.size());
  out += mtext;
  put_raw<std::uint64_t>(out, offset);
  for (const auto& [name, a] : arrays_)
    out.append(reinterpret_cast<const char*>(a.data.data()), a.data.size() * sizeof(double));
  put_raw<std::uint64_t>(out, fnv1a(out.data(), out.size()));
  return out;
}

Container Container::deserialize(const std::string& bytes) {
  Reader r{bytes};
  const std::string magic = r.bytes(sizeof(kMagic), "magic");
  if (std::memcmp(magic.data(), kMagic, sizeof(kMagic)) != 0)
    throw Error(ErrorCode::kCorruptFile, "not a promforge container (bad magic)");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kFormatVersion)
    throw Error(ErrorCode::kVersionMismatch, "container format version " + std::to_string(version) +
                                                 " is not supported (expected " + std::to_string(kFormatVersion) + ")");
  r.get<std::uint32_t>("reserved");
  const auto mlen = r.get<std::uint64_t>("manifest length");
  const std::string mtext = r.bytes(mlen, "manifest");
  const auto plen = r.get<std::uint64_t>("payload length");
  if (plen % sizeof(double) != 0) throw Error(ErrorCode::kCorruptFile, "payload length is not a multiple of 8");
  const std::size_t payload_at = r.pos;
  r.bytes(plen, "payload");
  const std::size_t checked = r.pos;
  const auto sum = r.get<std::uint64_t>("checksum");
  if (r.pos != bytes.size()) throw Error(ErrorCode::kCorruptFile, "trailing bytes after checksum");
  if (fnv1a(bytes.data(), checked) != sum) throw Error(ErrorCode::kChecksum, "container checksum mismatch");

  json manifest = json::parse(mtext, nullptr, false);
  if (manifest.is_discarded() || !manifest.is_object() || !manifest.contains("arrays"))
    throw Error(ErrorCode::kCorruptFile, "container manifest is malformed");
  Container c;
  c.meta = manifest.value("meta", json::object());
  try {
    for (const auto& e : manifest.at("arrays")) {
      Array a;
      a.shape = e.at("shape").get<std::vector<std::int64_t>>();
      std::uint64_t count = 1;
      for (auto s : a.shape) {
        if (s < 0) throw Error(ErrorCode::kCorruptFile, "negative array extent");
        count *= static_cast<std::uint64_t>(s);
      }
      const auto offset = e.at("offset").get<std::uint64_t>();
      if (a.shape.empty() || a.shape.size() > 2 || offset % sizeof(double) != 0 ||
          offset + count * sizeof(double) > plen)
        throw Error(ErrorCode::kCorruptFile, "array '" + e.at("name").get<std::string>() + "' exceeds the payload");
      a.data.resize(count);
      std::memcpy(a.data.data(), bytes.data() + payload_at + offset, count * sizeof(double));
      c.arrays_[e.at("name").get<std::string>()] = std::move(a);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptFile, std::string("container manifest is malformed: ") + e.what());
  }
  return c;
}

void Container::save(const std::string& path) const { write_file(path, serialize()); }

Container Container::load(const std::string& path) { return deserialize(read_file(path)); }

void write_file(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write '" + tmp + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::kIo, "write failed for '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace promforge::io
