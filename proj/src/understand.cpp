#include "atc2/understand.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "atc2/error.hpp"

namespace atc2 {

using nlohmann::json;

namespace {

std::vector<std::vector<std::string>> split_all(
    const std::vector<std::string>& phrases) {
  std::vector<std::vector<std::string>> out;
  for (const auto& p : phrases) {
    std::vector<std::string> toks;
    std::string t;
    for (char c : p) {
      if (c == ' ') {
        if (!t.empty()) toks.push_back(std::move(t));
        t.clear();
      } else {
        t += c;
      }
    }
    if (!t.empty()) toks.push_back(std::move(t));
    if (!toks.empty()) out.push_back(std::move(toks));
  }
  return out;
}

}  // namespace

PhraseologyGrammar PhraseologyGrammar::builtin(const AirlineTable& airlines) {
  PhraseologyGrammar g;
  g.commands = split_all({
      "cleared to land",
      "cleared for takeoff",
      "line up and wait",
      "hold short",
      "hold position",
      "go around",
      "descend",
      "climb",
      "maintain",
      "contact",
      "squawk",
      "report",
      "turn left",
      "turn right",
      "reduce speed",
      "proceed direct",
      "taxi",
      "vacate",
      "monitor",
      "expect",
  });
  g.value_templates = split_all({
      "flight level <digits>",
      "runway <digits> left",
      "runway <digits> right",
      "runway <digits> center",
      "runway <digits>",
      "heading <digits>",
      "altitude <digits> feet",
      "<digits> feet",
      "<digits> knots",
      "qnh <digits>",
      "frequency <digits> decimal <digits>",
      "<digits> decimal <digits>",
  });
  g.greetings = {"hello", "goodbye", "good morning", "good afternoon",
                 "good evening", "good day"};
  std::set<std::vector<std::string>> names;
  for (const auto& [code, name] : airlines) {
    (void)code;
    auto toks = split_all({name});
    if (!toks.empty()) names.insert(toks[0]);
  }
  g.airline_names.assign(names.begin(), names.end());
  return g;
}

PhraseologyGrammar PhraseologyGrammar::parse_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw AtcError(ErrorCode::InvalidConfig, e.what());
  }
  PhraseologyGrammar g;
  try {
    g.commands = split_all(j.value("commands", std::vector<std::string>{}));
    g.value_templates =
        split_all(j.value("value_templates", std::vector<std::string>{}));
    g.greetings = j.value("greetings", std::vector<std::string>{});
    g.airline_names =
        split_all(j.value("airline_names", std::vector<std::string>{}));
  } catch (const json::exception& e) {
    throw AtcError(ErrorCode::InvalidConfig, e.what());
  }
  for (const auto& c : g.commands)
    if (c.empty())
      throw AtcError(ErrorCode::InvalidConfig, "empty command pattern");
  return g;
}

std::string PhraseologyGrammar::to_json() const {
  auto join_all = [](const std::vector<std::vector<std::string>>& seqs) {
    std::vector<std::string> out;
    for (const auto& s : seqs) {
      std::string line;
      for (const auto& t : s) {
        if (!line.empty()) line += ' ';
        line += t;
      }
      out.push_back(std::move(line));
    }
    return out;
  };
  json j;
  j["commands"] = join_all(commands);
  j["value_templates"] = join_all(value_templates);
  j["greetings"] = greetings;
  j["airline_names"] = join_all(airline_names);
  return j.dump(2);
}

namespace {

bool is_digit_word(const std::string& t) {
  const auto& d = digit_words();
  return std::find(d.begin(), d.end(), t) != d.end();
}

bool is_icao_word(const std::string& t) {
  const auto& a = icao_alphabet();
  return std::find(a.begin(), a.end(), t) != a.end();
}

// Longest airline telephony name starting at i; 0 when none.
int match_airline(const std::vector<std::string>& tokens, std::size_t i,
                  const std::vector<std::vector<std::string>>& names) {
  int best = 0;
  for (const auto& name : names) {
    if (i + name.size() > tokens.size() ||
        static_cast<int>(name.size()) <= best)
      continue;
    if (std::equal(name.begin(), name.end(), tokens.begin() + i))
      best = static_cast<int>(name.size());
  }
  return best;
}

// Length of the template match at i, or 0. <digits> eats a maximal
// non-empty digit-word run; <letter> eats one spelling-alphabet word.
int match_template(const std::vector<std::string>& tokens, std::size_t i,
                   const std::vector<std::string>& tmpl) {
  std::size_t pos = i;
  for (const auto& el : tmpl) {
    if (el == "<digits>") {
      std::size_t run = pos;
      while (run < tokens.size() && is_digit_word(tokens[run])) ++run;
      if (run == pos) return 0;
      pos = run;
    } else if (el == "<letter>") {
      if (pos >= tokens.size() || !is_icao_word(tokens[pos])) return 0;
      ++pos;
    } else {
      if (pos >= tokens.size() || tokens[pos] != el) return 0;
      ++pos;
    }
  }
  return static_cast<int>(pos - i);
}

int match_phrase(const std::vector<std::string>& tokens, std::size_t i,
                 const std::vector<std::vector<std::string>>& phrases) {
  int best = 0;
  for (const auto& p : phrases) {
    if (i + p.size() > tokens.size() || static_cast<int>(p.size()) <= best)
      continue;
    if (std::equal(p.begin(), p.end(), tokens.begin() + i))
      best = static_cast<int>(p.size());
  }
  return best;
}

struct ContextCandidate {
  int start = 0;
  int end = 0;
  double score = 0.0;
};

bool overlaps(int a0, int a1, int b0, int b1) { return a0 < b1 && b0 < a1; }

}  // namespace

AnnotatedTranscript tag_entities(const std::vector<std::string>& tokens,
                                 const PhraseologyGrammar& grammar,
                                 const ContextList* context,
                                 const AirlineTable* airlines) {
  const std::size_t n = tokens.size();
  std::vector<EntitySpan> callsigns;

  // Grammar callsigns: airline name followed by a digit/letter-word run,
  // or a spelled registration (letter-word heavy run).
  for (std::size_t i = 0; i < n;) {
    const int name_len = match_airline(tokens, i, grammar.airline_names);
    if (name_len > 0) {
      std::size_t j = i + name_len;
      while (j < n && (is_digit_word(tokens[j]) || is_icao_word(tokens[j])))
        ++j;
      if (j > i + name_len) {
        callsigns.push_back({EntityLabel::Callsign, static_cast<int>(i),
                             static_cast<int>(j)});
        i = j;
        continue;
      }
    }
    if (is_digit_word(tokens[i]) || is_icao_word(tokens[i])) {
      std::size_t j = i;
      int letters = 0;
      while (j < n && (is_digit_word(tokens[j]) || is_icao_word(tokens[j]))) {
        letters += is_icao_word(tokens[j]) ? 1 : 0;
        ++j;
      }
      if (letters >= 2 && j - i >= 3) {
        callsigns.push_back({EntityLabel::Callsign, static_cast<int>(i),
                             static_cast<int>(j)});
      }
      i = j;
      continue;
    }
    ++i;
  }

  // Context callsigns: positional overlap against the expansions of the
  // surveillance list; they replace grammar spans they overlap.
  if (context && airlines && !context->callsigns.empty()) {
    std::vector<ContextCandidate> candidates;
    for (const auto& code : context->callsigns) {
      const CallsignExpansion exp = expand_callsign(code, *airlines);
      for (const auto& form : exp.forms) {
        const std::size_t m = form.tokens.size();
        if (m == 0) continue;
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t len = std::min(m, n - i);
          std::size_t matches = 0;
          for (std::size_t k = 0; k < len; ++k)
            if (tokens[i + k] == form.tokens[k]) ++matches;
          const double score = static_cast<double>(matches) / m;
          if (score >= 0.8)
            candidates.push_back({static_cast<int>(i),
                                  static_cast<int>(i + len), score});
        }
      }
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const ContextCandidate& a, const ContextCandidate& b) {
                if (a.score != b.score) return a.score > b.score;
                if (a.end - a.start != b.end - b.start)
                  return a.end - a.start > b.end - b.start;
                return a.start < b.start;
              });
    std::vector<EntitySpan> chosen;
    for (const auto& c : candidates) {
      bool clash = false;
      for (const auto& s : chosen)
        clash |= overlaps(c.start, c.end, s.start, s.end);
      if (!clash)
        chosen.push_back({EntityLabel::Callsign, c.start, c.end});
    }
    if (!chosen.empty()) {
      std::vector<EntitySpan> kept;
      for (const auto& g : callsigns) {
        bool shadowed = false;
        for (const auto& c : chosen)
          shadowed |= overlaps(g.start, g.end, c.start, c.end);
        if (!shadowed) kept.push_back(g);
      }
      kept.insert(kept.end(), chosen.begin(), chosen.end());
      callsigns = std::move(kept);
    }
  }

  auto taken = [&callsigns](int a, int b) {
    for (const auto& s : callsigns)
      if (overlaps(a, b, s.start, s.end)) return true;
    return false;
  };

  std::vector<EntitySpan> values;
  for (std::size_t i = 0; i < n;) {
    int best = 0;
    for (const auto& tmpl : grammar.value_templates)
      best = std::max(best, match_template(tokens, i, tmpl));
    if (best > 0 && !taken(static_cast<int>(i), static_cast<int>(i) + best)) {
      values.push_back({EntityLabel::Value, static_cast<int>(i),
                        static_cast<int>(i) + best});
      i += best;
    } else {
      ++i;
    }
  }

  auto taken2 = [&](int a, int b) {
    if (taken(a, b)) return true;
    for (const auto& s : values)
      if (overlaps(a, b, s.start, s.end)) return true;
    return false;
  };

  std::vector<EntitySpan> commands;
  for (std::size_t i = 0; i < n;) {
    const int len = match_phrase(tokens, i, grammar.commands);
    if (len > 0 && !taken2(static_cast<int>(i), static_cast<int>(i) + len)) {
      commands.push_back({EntityLabel::Command, static_cast<int>(i),
                          static_cast<int>(i) + len});
      i += len;
    } else {
      ++i;
    }
  }

  AnnotatedTranscript t;
  t.tokens = tokens;
  t.entities = std::move(callsigns);
  t.entities.insert(t.entities.end(), values.begin(), values.end());
  t.entities.insert(t.entities.end(), commands.begin(), commands.end());
  std::sort(t.entities.begin(), t.entities.end(),
            [](const EntitySpan& a, const EntitySpan& b) {
              return a.start < b.start;
            });
  validate(t);
  return t;
}

std::pair<Role, double> detect_role(const std::vector<std::string>& tokens,
                                    const EldModel& model) {
  std::vector<TranscriptToken> words;
  words.reserve(tokens.size());
  for (const auto& t : tokens) words.push_back({t, 1.0});
  const double p_atco = model.score(words);
  return {p_atco >= 0.5 ? Role::Atco : Role::Pilot, p_atco};
}

namespace {

// "descend" -> "descending", "reduce" -> "reducing".
std::string ing_form(const std::string& verb) {
  if (verb.size() >= 2 && verb.back() == 'e' && verb[verb.size() - 2] != 'e')
    return verb.substr(0, verb.size() - 1) + "ing";
  return verb + "ing";
}

std::set<std::string> readback_verbs(const PhraseologyGrammar& g) {
  std::set<std::string> verbs;
  for (const auto& cmd : g.commands)
    if (!cmd.empty()) verbs.insert(ing_form(cmd[0]));
  return verbs;
}

}  // namespace

std::vector<Turn> diarize_text(const std::vector<std::string>& tokens,
                               const PhraseologyGrammar& grammar) {
  const int n = static_cast<int>(tokens.size());
  if (n == 0) return {};
  const AnnotatedTranscript tagged = tag_entities(tokens, grammar);
  const std::set<std::string> readbacks = readback_verbs(grammar);

  auto inside_entity = [&tagged](int pos) {
    for (const auto& s : tagged.entities)
      if (pos > s.start && pos < s.end) return true;
    return false;
  };
  auto entity_at = [&tagged](int pos) -> const EntitySpan* {
    for (const auto& s : tagged.entities)
      if (s.start == pos) return &s;
    return nullptr;
  };
  // The last command/value span ending at or before pos, with no other
  // entity after it: "follows a command/value region".
  auto follows_instruction = [&tagged](int pos, int turn_start) {
    const EntitySpan* last = nullptr;
    for (const auto& s : tagged.entities)
      if (s.end <= pos && s.start >= turn_start)
        if (!last || s.end > last->end) last = &s;
    return last && (last->label == EntityLabel::Command ||
                    last->label == EntityLabel::Value);
  };
  auto greeting_before = [&](int pos) {
    for (const auto& gphrase : grammar.greetings) {
      std::vector<std::string> toks;
      std::string t;
      for (char c : gphrase) {
        if (c == ' ') {
          if (!t.empty()) toks.push_back(t);
          t.clear();
        } else {
          t += c;
        }
      }
      if (!t.empty()) toks.push_back(t);
      const int len = static_cast<int>(toks.size());
      if (len > 0 && pos - len >= 0 &&
          std::equal(toks.begin(), toks.end(), tokens.begin() + (pos - len)))
        return true;
    }
    return false;
  };

  std::vector<int> splits;
  int turn_start = 0;
  for (int pos = 1; pos < n; ++pos) {
    if (inside_entity(pos)) continue;
    bool split = false;
    const EntitySpan* span = entity_at(pos);
    if (span && span->label == EntityLabel::Callsign &&
        (follows_instruction(pos, turn_start) || greeting_before(pos)))
      split = true;
    if (!split && readbacks.count(tokens[pos]) &&
        follows_instruction(pos, turn_start))
      split = true;
    if (split) {
      splits.push_back(pos);
      turn_start = pos;
    }
  }

  std::vector<Turn> turns;
  int start = 0;
  auto label_turn = [&](int a, int b) {
    bool has_command = false, has_readback = false;
    bool trailing_callsign = false;
    for (const auto& s : tagged.entities) {
      if (s.start < a || s.end > b) continue;
      if (s.label == EntityLabel::Command) has_command = true;
      if (s.label == EntityLabel::Callsign && s.end == b)
        trailing_callsign = true;
    }
    for (int i = a; i < b; ++i)
      if (readbacks.count(tokens[i])) has_readback = true;
    if (has_readback) return Role::Pilot;
    if (has_command) return Role::Atco;
    if (trailing_callsign) return Role::Pilot;
    return Role::Atco;
  };
  for (int cut : splits) {
    turns.push_back({label_turn(start, cut), start, cut});
    start = cut;
  }
  turns.push_back({label_turn(start, n), start, n});
  return turns;
}

AnnotatedTranscript understand(const std::vector<std::string>& tokens,
                               const PhraseologyGrammar& grammar,
                               const ContextList* context,
                               const AirlineTable* airlines) {
  AnnotatedTranscript t = tag_entities(tokens, grammar, context, airlines);
  t.turns = diarize_text(tokens, grammar);
  validate(t);
  return t;
}

}  // namespace atc2
