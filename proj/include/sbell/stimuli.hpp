#pragma once

// Experiment inputs: the ambiguous-word lexicon, sentence templates,
// personas and the per-party setting prompts.
//
// Data file formats (UTF-8 text, '#' starts a comment line, blank lines ignored):
//   lexicon    word <TAB> meaning-alpha gloss <TAB> meaning-beta gloss
//   templates  one pattern per line containing {word1} and {word2} once each
//   prompts    party <TAB> priming text, party ∈ {alice, bob}
//   locations  one location per line
//   stopwords  whitespace-separated words ignored by the keyword classifier

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sbell/chsh_stats.hpp"
#include "sbell/random.hpp"

namespace sbell {

namespace bundled {
std::string_view lexicon();
std::string_view templates();
std::string_view prompts();
std::string_view stopwords();
std::string_view locations();
}  // namespace bundled

struct AmbiguousWord {
  std::string surface;
  std::string meaning_alpha;
  std::string meaning_beta;

  /// Throws std::invalid_argument on empty surface, empty glosses or identical glosses.
  void validate() const;
  friend bool operator==(const AmbiguousWord&, const AmbiguousWord&) = default;
};

class SentenceTemplate {
 public:
  static constexpr std::string_view kWord1Slot = "{word1}";
  static constexpr std::string_view kWord2Slot = "{word2}";

  SentenceTemplate() : pattern_("{word1} {word2}") {}
  /// Throws std::invalid_argument unless each slot occurs exactly once.
  explicit SentenceTemplate(std::string pattern);

  const std::string& pattern() const noexcept { return pattern_; }
  std::string render(std::string_view word1, std::string_view word2) const;
  friend bool operator==(const SentenceTemplate&, const SentenceTemplate&) = default;

 private:
  std::string pattern_;
};

struct Persona {
  std::string name;
  int age = 0;
  std::string location;
  std::string language;
  friend bool operator==(const Persona&, const Persona&) = default;
};

struct PersonaConfig {
  std::vector<std::string> locations;
  int age_min = 25;
  int age_max = 70;
  std::string language = "English";
};

struct SettingPrompt {
  SettingLabel label;
  std::string priming_text;
  friend bool operator==(const SettingPrompt&, const SettingPrompt&) = default;
};

struct SettingsPool {
  std::vector<std::string> alice;
  std::vector<std::string> bob;
};

struct TrialStimulus {
  std::array<AmbiguousWord, 2> word_pair;
  SentenceTemplate sentence_template;
  std::string rendered_sentence;
  /// In {A, A′, B, B′} order.
  std::array<SettingPrompt, 4> settings;
  Persona alice;
  Persona bob;

  const SettingPrompt& setting(SettingLabel label) const { return settings[label.index()]; }
};

/// Everything assemble_trial draws from.
struct StimulusPools {
  std::vector<AmbiguousWord> lexicon;
  std::vector<SentenceTemplate> templates;
  SettingsPool settings;
  PersonaConfig personas;

  /// The defaults compiled into the library.
  static StimulusPools bundled();
  /// Loads lexicon.tsv, templates.txt, prompts.tsv and locations.txt from `dir`;
  /// any missing file falls back to the bundled default.
  static StimulusPools load(const std::filesystem::path& dir);
};

std::vector<AmbiguousWord> parse_lexicon(std::string_view text, const std::string& source = "lexicon");
std::vector<SentenceTemplate> parse_templates(std::string_view text, const std::string& source = "templates");
SettingsPool parse_settings_pool(std::string_view text, const std::string& source = "prompts");
std::vector<std::string> parse_lines(std::string_view text);

/// Reads a whole file; throws DataError if it cannot be opened.
std::string read_text_file(const std::filesystem::path& path);

/// Alice and Bob with age and location drawn uniformly from `config`.
std::pair<Persona, Persona> generate_personas(const PersonaConfig& config, Rng& rng);

/// Draws a word pair without replacement, a template, and two distinct
/// prompts per party.
TrialStimulus assemble_trial(const std::vector<AmbiguousWord>& lexicon,
                             const std::vector<SentenceTemplate>& templates, const SettingsPool& settings,
                             std::pair<Persona, Persona> personas, Rng& rng);

/// generate_personas + assemble_trial from one pool bundle.
TrialStimulus draw_stimulus(const StimulusPools& pools, Rng& rng);

}  // namespace sbell
