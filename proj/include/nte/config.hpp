#pragma once

// Run configuration: one JSON document covering the game, search, curriculum,
// training, evaluation and output paths. Missing keys take the profile's
// preset; unknown keys are rejected.

#include <string>
#include <vector>

#include "json.hpp"
#include "nte/game.hpp"
#include "nte/self_improve.hpp"

namespace nte::config {

enum class Profile { PaperDefaults, DeskScale };

std::string to_string(Profile p);
Profile profile_from_string(const std::string& s);

struct EvalSettings {
  int games = 50;
  std::vector<std::string> attackers{"unbiased_learner"};
  std::vector<std::string> defenders{"unbiased_learner"};

  friend bool operator==(const EvalSettings&, const EvalSettings&) = default;
};

struct Paths {
  std::string out_dir = "nte_out";
  std::string checkpoint_dir;  // training output used by biased variants; empty = out_dir

  friend bool operator==(const Paths&, const Paths&) = default;
};

struct RunConfig {
  Profile profile = Profile::PaperDefaults;
  GameSpec game;
  improve::SearchSettings search;
  improve::CurriculumSpec curriculum;
  improve::TrainSettings train;
  EvalSettings eval;
  Paths paths;

  // Throws ConfigError with the offending field path.
  void validate() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

RunConfig preset(Profile p);

// `doc` must be a JSON object; "profile" selects the preset the other
// sections are laid over.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

// Every field, fully expanded.
nlohmann::json to_json(const RunConfig& cfg);

// FNV-1a of the canonical to_json dump, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

improve::MetaLearnConfig meta_learn_config(const RunConfig& cfg);

}  // namespace nte::config
