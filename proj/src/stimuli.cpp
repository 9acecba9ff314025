#include "sbell/stimuli.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "sbell/error.hpp"

namespace sbell {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Calls fn(line_number, trimmed_line) for every non-comment, non-blank line.
template <typename Fn>
void for_each_data_line(std::string_view text, Fn fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto end = nl == std::string_view::npos ? text.size() : nl;
    ++line_no;
    const std::string line = trim(text.substr(pos, end - pos));
    if (!line.empty() && line.front() != '#') fn(line_no, line);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  for (;;) {
    const auto tab = line.find('\t', pos);
    out.push_back(trim(std::string_view(line).substr(pos, tab == std::string::npos ? std::string::npos : tab - pos)));
    if (tab == std::string::npos) break;
    pos = tab + 1;
  }
  return out;
}

std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string_view::npos; p = hay.find(needle, p + needle.size())) ++n;
  return n;
}

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[rng.below(v.size())];
}

// Two distinct indices drawn uniformly without replacement.
std::pair<std::size_t, std::size_t> pick_two(std::size_t n, Rng& rng) {
  const std::size_t first = rng.below(n);
  std::size_t second = rng.below(n - 1);
  if (second >= first) ++second;
  return {first, second};
}

}  // namespace

void AmbiguousWord::validate() const {
  if (surface.empty()) throw std::invalid_argument("ambiguous word has empty surface");
  if (meaning_alpha.empty() || meaning_beta.empty())
    throw std::invalid_argument("ambiguous word '" + surface + "' has an empty gloss");
  if (meaning_alpha == meaning_beta)
    throw std::invalid_argument("ambiguous word '" + surface + "' has identical glosses");
}

SentenceTemplate::SentenceTemplate(std::string pattern) : pattern_(std::move(pattern)) {
  if (count_occurrences(pattern_, kWord1Slot) != 1 || count_occurrences(pattern_, kWord2Slot) != 1)
    throw std::invalid_argument("template must contain {word1} and {word2} exactly once: '" + pattern_ + "'");
}

std::string SentenceTemplate::render(std::string_view word1, std::string_view word2) const {
  std::string out = pattern_;
  // Substitute the later slot first so the earlier offset stays valid.
  auto p1 = out.find(kWord1Slot);
  auto p2 = out.find(kWord2Slot);
  if (p1 > p2) {
    out.replace(p1, kWord1Slot.size(), word1);
    out.replace(p2, kWord2Slot.size(), word2);
  } else {
    out.replace(p2, kWord2Slot.size(), word2);
    out.replace(p1, kWord1Slot.size(), word1);
  }
  return out;
}

std::vector<AmbiguousWord> parse_lexicon(std::string_view text, const std::string& source) {
  std::vector<AmbiguousWord> out;
  std::set<std::string> seen;
  for_each_data_line(text, [&](std::size_t line_no, const std::string& line) {
    const auto f = split_tabs(line);
    if (f.size() != 3) throw DataError("expected 3 tab-separated fields (word, alpha, beta)", source, line_no);
    AmbiguousWord w{f[0], f[1], f[2]};
    try {
      w.validate();
    } catch (const std::invalid_argument& e) {
      throw DataError(e.what(), source, line_no);
    }
    if (!seen.insert(w.surface).second) throw DataError("duplicate word '" + w.surface + "'", source, line_no);
    out.push_back(std::move(w));
  });
  return out;
}

std::vector<SentenceTemplate> parse_templates(std::string_view text, const std::string& source) {
  std::vector<SentenceTemplate> out;
  for_each_data_line(text, [&](std::size_t line_no, const std::string& line) {
    try {
      out.emplace_back(line);
    } catch (const std::invalid_argument& e) {
      throw DataError(e.what(), source, line_no);
    }
  });
  return out;
}

SettingsPool parse_settings_pool(std::string_view text, const std::string& source) {
  SettingsPool pool;
  std::set<std::string> seen;
  for_each_data_line(text, [&](std::size_t line_no, const std::string& line) {
    const auto f = split_tabs(line);
    if (f.size() != 2 || f[1].empty()) throw DataError("expected 'party<TAB>prompt text'", source, line_no);
    if (!seen.insert(f[1]).second) throw DataError("duplicate prompt text", source, line_no);
    if (f[0] == "alice") {
      pool.alice.push_back(f[1]);
    } else if (f[0] == "bob") {
      pool.bob.push_back(f[1]);
    } else {
      throw DataError("party must be 'alice' or 'bob', got '" + f[0] + "'", source, line_no);
    }
  });
  return pool;
}

std::vector<std::string> parse_lines(std::string_view text) {
  std::vector<std::string> out;
  for_each_data_line(text, [&](std::size_t, const std::string& line) { out.push_back(line); });
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file", path.string(), 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

StimulusPools StimulusPools::bundled() {
  StimulusPools p;
  p.lexicon = parse_lexicon(bundled::lexicon(), "bundled lexicon");
  p.templates = parse_templates(bundled::templates(), "bundled templates");
  p.settings = parse_settings_pool(bundled::prompts(), "bundled prompts");
  p.personas.locations = parse_lines(bundled::locations());
  return p;
}

StimulusPools StimulusPools::load(const std::filesystem::path& dir) {
  StimulusPools p = bundled();
  auto file = [&](const char* name) { return dir / name; };
  if (std::filesystem::exists(file("lexicon.tsv")))
    p.lexicon = parse_lexicon(read_text_file(file("lexicon.tsv")), file("lexicon.tsv").string());
  if (std::filesystem::exists(file("templates.txt")))
    p.templates = parse_templates(read_text_file(file("templates.txt")), file("templates.txt").string());
  if (std::filesystem::exists(file("prompts.tsv")))
    p.settings = parse_settings_pool(read_text_file(file("prompts.tsv")), file("prompts.tsv").string());
  if (std::filesystem::exists(file("locations.txt")))
    p.personas.locations = parse_lines(read_text_file(file("locations.txt")));
  return p;
}

std::pair<Persona, Persona> generate_personas(const PersonaConfig& config, Rng& rng) {
  if (config.locations.empty()) throw std::invalid_argument("generate_personas: no candidate locations");
  if (config.age_max < config.age_min) throw std::invalid_argument("generate_personas: empty age range");
  auto make = [&](const char* name) {
    Persona p;
    p.name = name;
    p.age = static_cast<int>(rng.between(config.age_min, config.age_max));
    p.location = pick(config.locations, rng);
    p.language = config.language;
    return p;
  };
  Persona alice = make("Alice");
  Persona bob = make("Bob");
  return {std::move(alice), std::move(bob)};
}

TrialStimulus assemble_trial(const std::vector<AmbiguousWord>& lexicon,
                             const std::vector<SentenceTemplate>& templates, const SettingsPool& settings,
                             std::pair<Persona, Persona> personas, Rng& rng) {
  if (lexicon.size() < 2) throw std::invalid_argument("assemble_trial: lexicon needs at least 2 words");
  if (templates.empty()) throw std::invalid_argument("assemble_trial: no sentence templates");
  if (settings.alice.size() < 2 || settings.bob.size() < 2)
    throw std::invalid_argument("assemble_trial: need at least 2 prompts per party");
  {
    std::set<std::string> all(settings.alice.begin(), settings.alice.end());
    all.insert(settings.bob.begin(), settings.bob.end());
    if (all.size() != settings.alice.size() + settings.bob.size())
      throw std::invalid_argument("assemble_trial: setting prompts must be pairwise distinct");
  }

  const auto [w1, w2] = pick_two(lexicon.size(), rng);
  const SentenceTemplate& tmpl = pick(templates, rng);
  const auto [a, ap] = pick_two(settings.alice.size(), rng);
  const auto [b, bp] = pick_two(settings.bob.size(), rng);

  TrialStimulus s{
      {lexicon[w1], lexicon[w2]},
      tmpl,
      tmpl.render(lexicon[w1].surface, lexicon[w2].surface),
      {SettingPrompt{kSettings[0], settings.alice[a]}, SettingPrompt{kSettings[1], settings.alice[ap]},
       SettingPrompt{kSettings[2], settings.bob[b]}, SettingPrompt{kSettings[3], settings.bob[bp]}},
      std::move(personas.first),
      std::move(personas.second),
  };
  return s;
}

TrialStimulus draw_stimulus(const StimulusPools& pools, Rng& rng) {
  auto personas = generate_personas(pools.personas, rng);
  return assemble_trial(pools.lexicon, pools.templates, pools.settings, std::move(personas), rng);
}

}  // namespace sbell
