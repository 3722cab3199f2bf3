#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace promforge::io {

constexpr char kMagic[8] = {'P', 'R', 'O', 'M', 'F', 'O', 'R', 'G'};
constexpr std::uint32_t kFormatVersion = 1;

/// Self-describing file: a JSON manifest plus named float64 arrays stored
/// row-major, little-endian, with their shapes in the manifest.
///
///   magic[8] | u32 version | u32 reserved | u64 manifest bytes | manifest
///   | u64 payload bytes | payload | u64 FNV-1a of everything before
class Container {
 public:
  nlohmann::json meta = nlohmann::json::object();

  void put(const std::string& name, const Eigen::MatrixXd& a);
  void put(const std::string& name, const Eigen::VectorXd& v);
  void put(const std::string& name, const std::vector<int>& v);

  bool has(const std::string& name) const { return arrays_.count(name) > 0; }
  Eigen::MatrixXd matrix(const std::string& name) const;
  Eigen::VectorXd vector(const std::string& name) const;
  std::vector<int> ints(const std::string& name) const;
  std::vector<std::string> names() const;

  std::string serialize() const;
  static Container deserialize(const std::string& bytes);

  void save(const std::string& path) const;
  static Container load(const std::string& path);

 private:
  struct Array {
    std::vector<std::int64_t> shape;
    std::vector<double> data;  // row-major
  };
  std::map<std::string, Array> arrays_;
};

std::uint64_t fnv1a(const char* data, std::size_t n);

/// Writes atomically: a temporary sibling file is renamed over the target.
void write_file(const std::string& path, const std::string& bytes);
std::string read_file(const std::string& path);

}  // namespace promforge::io
