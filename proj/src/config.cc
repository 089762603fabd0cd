// Copyright 2026 The SSB Codec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ssb/config.h"

#include <fstream>
#include <set>
#include <sstream>

#include "ssb/error.h"

namespace ssb {

namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int ParseInt(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const int out = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    Fail(ErrorCode::kConfig, "bad integer for " + key + ": '" + v + "'");
  }
}

std::vector<int> ParseList(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(ParseInt(key, Trim(item)));
  return out;
}

std::string JoinList(const std::vector<int>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

}  // namespace

void CodecConfig::Validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) Fail(ErrorCode::kConfig, what);
  };
  require(stage_channels.size() == kNumStages && depths.size() == kNumStages &&
              heads.size() == kNumStages,
          "stage_channels, depths and heads need exactly 4 entries (total stride 16)");
  for (int s = 0; s < kNumStages; ++s) {
    require(stage_channels[s] > 0, "stage channel width must be positive");
    require(depths[s] >= 0, "depth must be non-negative");
    require(heads[s] > 0 && stage_channels[s] % heads[s] == 0,
            "stage channel width must be divisible by its head count");
  }
  require(window >= 1, "window must be positive");
  require(latent_channels >= 1, "latent_channels must be positive");
  require(hyper_channels >= 1, "hyper_channels must be positive");
  require(slices >= 1 && slices <= 255 && slices <= latent_channels,
          "slices must be in [1, min(255, latent_channels)]");
  require(latent_channels <= 65535, "latent_channels must fit 16 bits");
  require(block_size >= kTotalStride && block_size % kTotalStride == 0 && block_size <= 65535,
          "block_size must be a positive multiple of 16");
  require(sigma_min > 0.0f && sigma_min < 64.0f, "sigma_min must be in (0, 64)");
  require(symbol_bound >= 1 && symbol_bound <= 4096, "symbol_bound must be in [1, 4096]");
  require(cdf_precision == 16, "only 16-bit cdf precision is supported");
}

std::vector<int> CodecConfig::SliceWidths() const {
  std::vector<int> w(slices, latent_channels / slices);
  w.back() += latent_channels % slices;
  return w;
}

std::vector<int> CodecConfig::SliceOffsets() const {
  std::vector<int> off;
  int acc = 0;
  for (int w : SliceWidths()) {
    off.push_back(acc);
    acc += w;
  }
  return off;
}

CodecConfig CodecConfig::Parse(const std::string& text) {
  CodecConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      Fail(ErrorCode::kConfig, "line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    if (!seen.insert(key).second) Fail(ErrorCode::kConfig, "duplicate key " + key);
    if (key == "stage_channels") {
      cfg.stage_channels = ParseList(key, value);
    } else if (key == "depths") {
      cfg.depths = ParseList(key, value);
    } else if (key == "window") {
      cfg.window = ParseInt(key, value);
    } else if (key == "heads") {
      cfg.heads = ParseList(key, value);
    } else if (key == "latent_channels") {
      cfg.latent_channels = ParseInt(key, value);
    } else if (key == "hyper_channels") {
      cfg.hyper_channels = ParseInt(key, value);
    } else if (key == "slices") {
      cfg.slices = ParseInt(key, value);
    } else if (key == "charm_enabled") {
      if (value == "true" || value == "1") {
        cfg.charm_enabled = true;
      } else if (value == "false" || value == "0") {
        cfg.charm_enabled = false;
      } else {
        Fail(ErrorCode::kConfig, "charm_enabled must be true or false");
      }
    } else if (key == "block_size") {
      cfg.block_size = ParseInt(key, value);
    } else if (key == "sigma_min") {
      try {
        cfg.sigma_min = std::stof(value);
      } catch (const std::exception&) {
        Fail(ErrorCode::kConfig, "bad real for sigma_min");
      }
    } else if (key == "symbol_bound") {
      cfg.symbol_bound = ParseInt(key, value);
    } else if (key == "cdf_precision") {
      cfg.cdf_precision = ParseInt(key, value);
    } else {
      Fail(ErrorCode::kConfig, "unknown key " + key);
    }
  }
  cfg.Validate();
  return cfg;
}

std::string CodecConfig::Serialize() const {
  std::ostringstream os;
  os << "stage_channels = " << JoinList(stage_channels) << "\n"
     << "depths = " << JoinList(depths) << "\n"
     << "window = " << window << "\n"
     << "heads = " << JoinList(heads) << "\n"
     << "latent_channels = " << latent_channels << "\n"
     << "hyper_channels = " << hyper_channels << "\n"
     << "slices = " << slices << "\n"
     << "charm_enabled = " << (charm_enabled ? "true" : "false") << "\n"
     << "block_size = " << block_size << "\n"
     << "sigma_min = " << sigma_min << "\n"
     << "symbol_bound = " << symbol_bound << "\n"
     << "cdf_precision = " << cdf_precision << "\n";
  return os.str();
}

CodecConfig LoadConfig(const std::string& path) {
  std::ifstream f(path);
  if (!f) Fail(ErrorCode::kIo, "cannot open config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return CodecConfig::Parse(ss.str());
}

}  // namespace ssb
