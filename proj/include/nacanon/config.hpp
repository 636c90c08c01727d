// Copyright 2026 nacanon authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef NACANON_CONFIG_HPP
#define NACANON_CONFIG_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace nacanon {

// Flat key=value configuration. Every key has a documented default;
// unknown keys are rejected with ConfigError.
class Config {
 public:
  Config();  // defaults

  static Config load(const std::string& path);
  void save(const std::string& path) const;

  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;

  int get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

  struct KeyDoc {
    const char* key;
    const char* default_value;
    const char* doc;
  };
  static const std::vector<KeyDoc>& key_docs();

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace nacanon

#endif  // NACANON_CONFIG_HPP
