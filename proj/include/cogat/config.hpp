#pragma once

// Run configuration in a plain `key = value` text format ('#' starts a comment).
//
//   train_path = data/train.jsonl
//   dev_path   = data/dev.jsonl
//   hidden_dim = 64
//   mode       = soft

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cogat/model.hpp"
#include "cogat/training.hpp"

namespace cogat {

struct RunConfig {
  std::filesystem::path train_path;
  std::filesystem::path dev_path;
  std::filesystem::path test_path;
  std::filesystem::path out_dir = "out";
  ModelConfig model;
  TrainConfig train;
  std::vector<double> alpha_grid = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};

  // Applies one `key=value` setting; throws InputError naming the field.
  void set(std::string_view key, std::string_view value);
  // Field-level checks (dimensions, ranges, alpha grid). Throws InputError.
  void validate() const;
  // Every field, resolved (e.g. the head count), one per line in key order.
  std::string to_text() const;

  static RunConfig parse(std::string_view text, std::string_view source = "<config>");
  static RunConfig load(const std::filesystem::path& path);
};

std::vector<double> parse_alpha_list(std::string_view text);

}  // namespace cogat
