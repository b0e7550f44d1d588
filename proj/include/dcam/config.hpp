#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dcam {

// Flat key/value configuration in a TOML subset:
//
//   # comment
//   demosaic = "malvar"
//   p = 6
//   oracle_exposure = true
//   device_matrix = [1, 0, 0, 0, 1, 0, 0, 0, 1]
//   [denoise]            # section headers prefix later keys: denoise.window
//   window = 5
//
// Values keep their source text; typed getters parse on access.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get_string(const std::string& key) const;
  std::optional<double> get_double(const std::string& key) const;
  std::optional<long long> get_int(const std::string& key) const;
  std::optional<bool> get_bool(const std::string& key) const;
  std::optional<std::vector<double>> get_doubles(const std::string& key) const;

  void set(const std::string& key, std::string raw_value) { values_[key] = std::move(raw_value); }
  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace dcam
