#include "atc2/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <set>
#include <sstream>

#include "atc2/error.hpp"

namespace atc2 {

Lattice::Lattice(int num_states, std::vector<Arc> arcs,
                 std::vector<std::pair<int, double>> finals)
    : num_states_(num_states), arcs_(std::move(arcs)), finals_(std::move(finals)) {
  validate_and_index();
}

void Lattice::validate_and_index() {
  if (num_states_ < 0)
    throw AtcError(ErrorCode::MalformedLattice, "negative state count");
  for (const auto& [state, cost] : finals_) {
    (void)cost;
    if (state < 0 || state >= num_states_)
      throw AtcError(ErrorCode::MalformedLattice, "final state out of range");
  }
  out_.assign(num_states_, {});
  std::vector<int> indegree(num_states_, 0);
  for (std::size_t i = 0; i < arcs_.size(); ++i) {
    const Arc& a = arcs_[i];
    if (a.src < 0 || a.src >= num_states_ || a.dst < 0 || a.dst >= num_states_)
      throw AtcError(ErrorCode::MalformedLattice, "arc state out of range");
    if (!std::isfinite(a.cost))
      throw AtcError(ErrorCode::MalformedLattice, "non-finite arc cost");
    if (a.word.empty())
      throw AtcError(ErrorCode::MalformedLattice, "empty word on arc");
    out_[a.src].push_back(static_cast<int>(i));
    ++indegree[a.dst];
  }
  // Kahn's algorithm, smallest state id first for a stable order.
  topo_.clear();
  std::set<int> ready;
  for (int s = 0; s < num_states_; ++s)
    if (indegree[s] == 0) ready.insert(s);
  while (!ready.empty()) {
    int s = *ready.begin();
    ready.erase(ready.begin());
    topo_.push_back(s);
    for (int ai : out_[s])
      if (--indegree[arcs_[ai].dst] == 0) ready.insert(arcs_[ai].dst);
  }
  if (static_cast<int>(topo_.size()) != num_states_)
    throw AtcError(ErrorCode::MalformedLattice, "lattice contains a cycle");
}

std::optional<double> Lattice::final_cost(int state) const {
  for (const auto& [s, c] : finals_)
    if (s == state) return c;
  return std::nullopt;
}

Lattice Lattice::parse(const std::string& text) {
  std::vector<Arc> arcs;
  std::vector<std::pair<int, double>> finals;
  int max_state = -1;
  std::istringstream in(text);
  std::string line;
  bool any = false;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::vector<std::string> fields;
    std::string f;
    while (row >> f) fields.push_back(f);
    if (fields.empty()) continue;
    any = true;
    try {
      if (fields.size() == 4) {
        Arc a;
        a.src = std::stoi(fields[0]);
        a.dst = std::stoi(fields[1]);
        a.word = fields[2];
        a.cost = std::stod(fields[3]);
        max_state = std::max({max_state, a.src, a.dst});
        arcs.push_back(std::move(a));
      } else if (fields.size() == 2) {
        int s = std::stoi(fields[0]);
        finals.emplace_back(s, std::stod(fields[1]));
        max_state = std::max(max_state, s);
      } else {
        throw AtcError(ErrorCode::MalformedLattice,
                       "expected `src dst word cost` or `state cost`: " + line);
      }
    } catch (const std::invalid_argument&) {
      throw AtcError(ErrorCode::MalformedLattice, "bad number in: " + line);
    } catch (const std::out_of_range&) {
      throw AtcError(ErrorCode::MalformedLattice, "number out of range: " + line);
    }
  }
  if (!any) throw AtcError(ErrorCode::MalformedLattice, "empty lattice text");
  return Lattice(max_state + 1, std::move(arcs), std::move(finals));
}

std::string Lattice::serialize() const {
  std::ostringstream out;
  for (const auto& a : arcs_)
    out << a.src << ' ' << a.dst << ' ' << a.word << ' ' << a.cost << '\n';
  for (const auto& [s, c] : finals_) out << s << ' ' << c << '\n';
  return out.str();
}

std::vector<Lattice> Lattice::parse_batch(const std::string& text) {
  std::vector<Lattice> result;
  std::istringstream in(text);
  std::string line, chunk;
  auto flush = [&] {
    if (chunk.find_first_not_of(" \t\r\n") != std::string::npos)
      result.push_back(parse(chunk));
    chunk.clear();
  };
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      flush();
    } else {
      chunk += line;
      chunk += '\n';
    }
  }
  flush();
  return result;
}

BiasingFst::BiasingFst(const std::vector<std::vector<std::string>>& sequences,
                       double discount_per_token)
    : discount_(discount_per_token) {
  if (discount_ > 0.0)
    throw AtcError(ErrorCode::PositiveDiscount,
                   "discount must be <= 0, got " + std::to_string(discount_));
  std::set<std::vector<std::string>> dedup;
  for (const auto& seq : sequences) {
    if (seq.empty())
      throw AtcError(ErrorCode::EmptySequenceSet, "empty boosted sequence");
    dedup.insert(seq);
  }
  if (dedup.empty())
    throw AtcError(ErrorCode::EmptySequenceSet, "no boosted sequences");
  if (dedup.size() > 10000)
    throw AtcError(ErrorCode::InvariantViolation,
                   "too many boosted sequences (limit 10000)");
  num_sequences_ = dedup.size();

  nodes_.resize(1);
  for (const auto& seq : dedup) {
    int node = 0;
    for (const auto& tok : seq) {
      auto it = nodes_[node].children.find(tok);
      if (it == nodes_[node].children.end()) {
        int next = static_cast<int>(nodes_.size());
        nodes_[node].children.emplace(tok, next);
        nodes_.push_back(Node{});
        nodes_[next].depth = nodes_[node].depth + 1;
        node = next;
      } else {
        node = it->second;
      }
    }
    nodes_[node].terminal = true;
  }
  // Deepest completed sequence on each root path, for partial-match
  // refunds. Parents precede children in index order, so one pass
  // finalizes each node before its children inherit.
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].terminal) nodes_[i].last_terminal_depth = nodes_[i].depth;
    for (const auto& [tok, child] : nodes_[i].children) {
      (void)tok;
      if (!nodes_[child].terminal)
        nodes_[child].last_terminal_depth = nodes_[i].last_terminal_depth;
    }
  }
}

int BiasingFst::child(int node, const std::string& token) const {
  const auto& ch = nodes_[node].children;
  auto it = ch.find(token);
  return it == ch.end() ? -1 : it->second;
}

std::pair<int, double> BiasingFst::step(int node, const std::string& token) const {
  int next = child(node, token);
  if (next >= 0) return {next, discount_};
  // Dead end: give back the credit of the abandoned partial match, then
  // retry this token at the root.
  double refund = final_weight(node);
  int retry = child(0, token);
  if (retry >= 0) return {retry, refund + discount_};
  return {0, refund};
}

double BiasingFst::final_weight(int node) const {
  const Node& n = nodes_[node];
  return -discount_ * (n.depth - n.last_terminal_depth);
}

BiasingFst build_biasing_fst(
    const std::vector<std::vector<std::string>>& sequences,
    double discount_per_token) {
  std::set<std::vector<std::string>> dedup(sequences.begin(), sequences.end());
  if (dedup.size() > 1000)
    std::cerr << "warning: biasing " << dedup.size()
              << " sequences; effectiveness degrades past 1000\n";
  return BiasingFst(sequences, discount_per_token);
}

Lattice compose_bias(const Lattice& lattice, const BiasingFst& bias) {
  // Product construction. The bias transition function is total and
  // deterministic, so every lattice arc maps to exactly one product arc
  // and the word-sequence path set is preserved 1:1.
  std::map<std::pair<int, int>, int> ids;
  std::vector<std::pair<int, int>> states;
  auto intern = [&](int s, int q) {
    auto [it, inserted] = ids.emplace(std::make_pair(s, q),
                                      static_cast<int>(states.size()));
    if (inserted) states.emplace_back(s, q);
    return it->second;
  };
  if (lattice.num_states() == 0) return lattice;
  intern(0, 0);
  std::vector<Arc> arcs;
  std::vector<std::pair<int, double>> finals;
  // Expanding along the lattice's topological order guarantees every
  // product state is created before its out-arcs are needed.
  std::vector<std::vector<int>> by_state(lattice.num_states());
  by_state[0].push_back(0);
  std::vector<int> topo_pos(lattice.num_states());
  for (std::size_t i = 0; i < lattice.topo_order().size(); ++i)
    topo_pos[lattice.topo_order()[i]] = static_cast<int>(i);
  for (int s : lattice.topo_order()) {
    // Deterministic expansion order: by product-state id.
    std::sort(by_state[s].begin(), by_state[s].end());
    for (int pid : by_state[s]) {
      int q = states[pid].second;
      if (auto fc = lattice.final_cost(s))
        finals.emplace_back(pid, *fc + bias.final_weight(q));
      for (int ai : lattice.out_arcs()[s]) {
        const Arc& a = lattice.arcs()[ai];
        auto [q2, w] = bias.step(q, a.word);
        bool fresh = ids.find({a.dst, q2}) == ids.end();
        int dst = intern(a.dst, q2);
        if (fresh) by_state[a.dst].push_back(dst);
        arcs.push_back({pid, dst, a.word, a.cost + w});
      }
    }
  }
  return Lattice(static_cast<int>(states.size()), std::move(arcs),
                 std::move(finals));
}

namespace {

struct PathCandidate {
  double cost = 0.0;
  std::vector<std::string> tokens;
  std::vector<int> arc_indices;
};

bool better(const PathCandidate& a, const PathCandidate& b) {
  if (a.cost != b.cost) return a.cost < b.cost;
  return std::lexicographical_compare(a.tokens.begin(), a.tokens.end(),
                                      b.tokens.begin(), b.tokens.end());
}

}  // namespace

BestPath best_path(const Lattice& lattice) {
  if (lattice.num_states() == 0)
    throw AtcError(ErrorCode::NoPath, "empty lattice");
  std::vector<std::optional<PathCandidate>> best(lattice.num_states());
  const auto& topo = lattice.topo_order();
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    int s = *it;
    std::optional<PathCandidate> cand;
    if (auto fc = lattice.final_cost(s))
      cand = PathCandidate{*fc, {}, {}};
    for (int ai : lattice.out_arcs()[s]) {
      const Arc& a = lattice.arcs()[ai];
      if (!best[a.dst]) continue;
      PathCandidate via;
      via.cost = a.cost + best[a.dst]->cost;
      via.tokens.reserve(best[a.dst]->tokens.size() + 1);
      via.tokens.push_back(a.word);
      via.tokens.insert(via.tokens.end(), best[a.dst]->tokens.begin(),
                        best[a.dst]->tokens.end());
      via.arc_indices.reserve(best[a.dst]->arc_indices.size() + 1);
      via.arc_indices.push_back(ai);
      via.arc_indices.insert(via.arc_indices.end(),
                             best[a.dst]->arc_indices.begin(),
                             best[a.dst]->arc_indices.end());
      if (!cand || better(via, *cand)) cand = std::move(via);
    }
    best[s] = std::move(cand);
  }
  if (!best[0])
    throw AtcError(ErrorCode::NoPath, "no path from start to a final state");
  return {best[0]->tokens, best[0]->cost, best[0]->arc_indices};
}

std::vector<double> word_posteriors(const Lattice& lattice) {
  if (lattice.num_states() == 0)
    throw AtcError(ErrorCode::NoPath, "empty lattice");
  const auto& topo = lattice.topo_order();
  std::vector<double> alpha(lattice.num_states(), 0.0);
  std::vector<double> beta(lattice.num_states(), 0.0);
  alpha[0] = 1.0;
  for (int s : topo)
    for (int ai : lattice.out_arcs()[s]) {
      const Arc& a = lattice.arcs()[ai];
      alpha[a.dst] += alpha[a.src] * std::exp(-a.cost);
    }
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    int s = *it;
    if (auto fc = lattice.final_cost(s)) beta[s] += std::exp(-*fc);
    for (int ai : lattice.out_arcs()[s]) {
      const Arc& a = lattice.arcs()[ai];
      beta[s] += std::exp(-a.cost) * beta[a.dst];
    }
  }
  const double z = beta[0];
  if (!(z > 0.0))
    throw AtcError(ErrorCode::NoPath, "no probability mass reaches a final");
  std::vector<double> post(lattice.arcs().size(), 0.0);
  for (std::size_t ai = 0; ai < lattice.arcs().size(); ++ai) {
    const Arc& a = lattice.arcs()[ai];
    post[ai] = std::clamp(alpha[a.src] * std::exp(-a.cost) * beta[a.dst] / z,
                          0.0, 1.0);
  }
  return post;
}

double best_path_confidence(const Lattice& lattice, const BestPath& path,
                            const std::vector<double>& posteriors) {
  (void)lattice;
  if (path.arc_indices.empty()) return 0.0;
  double sum = 0.0;
  for (int ai : path.arc_indices) sum += posteriors.at(ai);
  return sum / static_cast<double>(path.arc_indices.size());
}

}  // namespace atc2
