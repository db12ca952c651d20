#include "atc2/textnorm.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "atc2/error.hpp"

namespace atc2 {

const std::vector<std::string>& icao_alphabet() {
  static const std::vector<std::string> words = {
      "alfa",     "bravo",   "charlie", "delta",  "echo",   "foxtrot",
      "golf",     "hotel",   "india",   "juliett", "kilo",   "lima",
      "mike",     "november", "oscar",  "papa",   "quebec", "romeo",
      "sierra",   "tango",   "uniform", "victor", "whiskey", "x-ray",
      "yankee",   "zulu"};
  return words;
}

const std::vector<std::string>& digit_words() {
  static const std::vector<std::string> words = {
      "zero", "one", "two", "three", "four",
      "five", "six", "seven", "eight", "nine"};
  return words;
}

namespace {

const std::map<std::string, std::string>& aliases() {
  static const std::map<std::string, std::string> a = {{"niner", "nine"}};
  return a;
}

bool all_upper_letters(const std::string& s) {
  return !s.empty() &&
         std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isupper(c); });
}

void push_word(std::vector<std::string>& out, std::string w) {
  auto it = aliases().find(w);
  out.push_back(it == aliases().end() ? std::move(w) : it->second);
}

}  // namespace

std::vector<std::string> normalize(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string raw;
  while (in >> raw) {
    // Walk the token as runs of letters(+hyphens) and digits; everything
    // else separates, except '.' between digits which reads as "decimal".
    std::size_t i = 0;
    const std::size_t n = raw.size();
    bool prev_digits = false;
    while (i < n) {
      unsigned char c = raw[i];
      if (std::isalpha(c)) {
        std::size_t j = i;
        while (j < n && (std::isalpha(static_cast<unsigned char>(raw[j])) ||
                         (raw[j] == '-' && j + 1 < n &&
                          std::isalpha(static_cast<unsigned char>(raw[j + 1])))))
          ++j;
        std::string run = raw.substr(i, j - i);
        if (all_upper_letters(run) && run.size() >= 2 && run.size() <= 4) {
          // Short all-caps runs are abbreviations read letter by letter.
          for (char ch : run)
            out.push_back(std::string(1, static_cast<char>(std::tolower(ch))));
        } else {
          std::transform(run.begin(), run.end(), run.begin(),
                         [](unsigned char ch) { return std::tolower(ch); });
          push_word(out, std::move(run));
        }
        prev_digits = false;
        i = j;
      } else if (std::isdigit(c)) {
        std::size_t j = i;
        while (j < n && std::isdigit(static_cast<unsigned char>(raw[j]))) ++j;
        for (std::size_t k = i; k < j; ++k)
          out.push_back(digit_words()[raw[k] - '0']);
        prev_digits = true;
        i = j;
      } else if (c == '.' && prev_digits && i + 1 < n &&
                 std::isdigit(static_cast<unsigned char>(raw[i + 1]))) {
        out.push_back("decimal");
        prev_digits = false;
        ++i;
      } else {
        prev_digits = false;
        ++i;
      }
    }
  }
  return out;
}

const AirlineTable& default_airline_table() {
  static const AirlineTable table = {
      {"AAL", "american"},       {"ACA", "air canada"},
      {"AFR", "air france"},     {"AUA", "austrian"},
      {"AZA", "alitalia"},       {"BAW", "speedbird"},
      {"BEL", "beeline"},        {"CSA", "c s a"},
      {"CSN", "china southern"}, {"DAL", "delta"},
      {"DLH", "lufthansa"},      {"EIN", "shamrock"},
      {"EWG", "eurowings"},      {"EZY", "easy"},
      {"FIN", "finnair"},        {"IBE", "iberia"},
      {"KLM", "k l m"},          {"LOT", "pollot"},
      {"NAX", "nordic"},         {"QTR", "qatari"},
      {"RYR", "ryanair"},        {"SAS", "scandinavian"},
      {"SWR", "swiss"},          {"TAP", "air portugal"},
      {"THY", "turkish"},        {"TVS", "skytravel"},
      {"UAE", "emirates"},       {"UAL", "united"},
      {"VLG", "vueling"},        {"WZZ", "wizz air"},
  };
  return table;
}

AirlineTable load_airline_table_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw AtcError(ErrorCode::IoError, "cannot open " + path);
  AirlineTable table;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto comma = line.find(',');
    if (comma == std::string::npos)
      throw AtcError(ErrorCode::MalformedRecord, "expected CSV row: " + line);
    std::string key = line.substr(0, comma);
    std::string name = line.substr(comma + 1);
    if (!all_upper_letters(key)) continue;  // header row
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    table[key] = name;
  }
  return table;
}

namespace {

std::vector<std::string> split_tokens(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string t;
  while (in >> t) out.push_back(t);
  return out;
}

void verbalize_char(std::vector<std::string>& out, char c) {
  if (std::isdigit(static_cast<unsigned char>(c))) {
    out.push_back(digit_words()[c - '0']);
  } else {
    out.push_back(icao_alphabet()[std::toupper(static_cast<unsigned char>(c)) - 'A']);
  }
}

}  // namespace

CallsignExpansion expand_callsign(const std::string& code,
                                  const AirlineTable& table) {
  std::string clean;
  for (char c : code)
    if (std::isalnum(static_cast<unsigned char>(c)))
      clean += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (clean.empty())
    throw AtcError(ErrorCode::InvariantViolation,
                   "not a callsign code: " + code);

  CallsignExpansion result;
  result.code = clean;

  std::size_t p = 0;
  while (p < clean.size() && std::isalpha(static_cast<unsigned char>(clean[p])))
    ++p;
  const std::string prefix = clean.substr(0, p);
  const std::string suffix = clean.substr(p);

  Verbalization spelled{{}, VerbalizationKind::Spelled};
  for (char c : clean) verbalize_char(spelled.tokens, c);

  auto airline = table.find(prefix);
  if (airline == table.end()) {
    result.forms.push_back(std::move(spelled));
    result.unknown_designator = prefix.size() >= 2;
    return result;
  }

  const std::vector<std::string> name = split_tokens(airline->second);
  Verbalization full{name, VerbalizationKind::Full};
  for (char c : suffix) verbalize_char(full.tokens, c);

  Verbalization shortened{name, VerbalizationKind::Shortened};
  const std::size_t tail = std::min<std::size_t>(2, suffix.size());
  for (std::size_t i = suffix.size() - tail; i < suffix.size(); ++i)
    verbalize_char(shortened.tokens, suffix[i]);

  result.forms.push_back(std::move(full));
  std::set<std::vector<std::string>> seen{result.forms[0].tokens};
  for (auto& v : {std::move(spelled), std::move(shortened)})
    if (seen.insert(v.tokens).second) result.forms.push_back(v);
  return result;
}

std::vector<std::vector<std::string>> expansions_to_ngrams(
    const std::vector<CallsignExpansion>& expansions, BoostMode mode) {
  std::vector<std::vector<std::string>> out;
  std::set<std::vector<std::string>> seen;
  for (const auto& e : expansions) {
    for (const auto& v : e.forms) {
      if (mode == BoostMode::Ngram) {
        if (seen.insert(v.tokens).second) out.push_back(v.tokens);
      } else {
        for (const auto& tok : v.tokens) {
          std::vector<std::string> uni{tok};
          if (seen.insert(uni).second) out.push_back(std::move(uni));
        }
      }
    }
  }
  return out;
}

}  // namespace atc2
