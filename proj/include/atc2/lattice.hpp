#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace atc2 {

/// One weighted arc of a word lattice. Costs are tropical weights
/// (negative natural-log probabilities); biased lattices may carry
/// negative arc costs after discounts are applied.
struct Arc {
  int src = 0;
  int dst = 0;
  std::string word;
  double cost = 0.0;
};

/// Acyclic weighted word graph over recognition hypotheses.
/// State 0 is the start state. Immutable once validated.
class Lattice {
 public:
  Lattice() = default;
  Lattice(int num_states, std::vector<Arc> arcs,
          std::vector<std::pair<int, double>> finals);

  int num_states() const noexcept { return num_states_; }
  const std::vector<Arc>& arcs() const noexcept { return arcs_; }
  const std::vector<std::pair<int, double>>& finals() const noexcept {
    return finals_;
  }
  bool empty() const noexcept { return num_states_ == 0; }

  std::optional<double> final_cost(int state) const;

  /// States in topological order (start first).
  const std::vector<int>& topo_order() const noexcept { return topo_; }

  /// Arc indices leaving each state.
  const std::vector<std::vector<int>>& out_arcs() const noexcept {
    return out_;
  }

  /// Text format, one arc per line `src dst word cost`, finals `state cost`.
  static Lattice parse(const std::string& text);
  std::string serialize() const;

  /// Batch file: lattices separated by blank lines.
  static std::vector<Lattice> parse_batch(const std::string& text);

 private:
  void validate_and_index();

  int num_states_ = 0;
  std::vector<Arc> arcs_;
  std::vector<std::pair<int, double>> finals_;
  std::vector<int> topo_;
  std::vector<std::vector<int>> out_;
};

/// Trie-shaped biasing transducer over boosted token sequences.
///
/// Matching semantics: each matched token provisionally earns
/// discount_per_token; when the match can no longer be extended (or input
/// ends) the credit beyond the deepest completed sequence is refunded and
/// the failing token is retried at the root. After a completed match the
/// next attempt starts at the root, so overlapping matches earn no credit.
class BiasingFst {
 public:
  BiasingFst(const std::vector<std::vector<std::string>>& sequences,
             double discount_per_token);

  double discount_per_token() const noexcept { return discount_; }
  std::size_t num_sequences() const noexcept { return num_sequences_; }
  std::size_t num_nodes() const noexcept { return nodes_.size(); }

  /// Deterministic total transition: consume `token` at `node`, returning
  /// the next node and the weight contributed (discount, possibly plus a
  /// refund of an abandoned partial match).
  std::pair<int, double> step(int node, const std::string& token) const;

  /// Weight owed when the input ends at `node` (refund of any partial match
  /// beyond the deepest completed sequence on the current attempt).
  double final_weight(int node) const;

 private:
  struct Node {
    std::map<std::string, int> children;
    int depth = 0;
    bool terminal = false;
    // depth of the deepest terminal on the root path, 0 if none
    int last_terminal_depth = 0;
  };

  int child(int node, const std::string& token) const;

  std::vector<Node> nodes_;
  double discount_ = 0.0;
  std::size_t num_sequences_ = 0;
};

/// Builds the trie from deduplicated sequences. Warns on stderr above 1000
/// distinct sequences (biasing effectiveness degrades past that size).
BiasingFst build_biasing_fst(
    const std::vector<std::vector<std::string>>& sequences,
    double discount_per_token);

/// Composition `lattice ∘ bias`: same word-sequence path set, each path's
/// cost shifted by the discounts of its matched boosted sequences.
Lattice compose_bias(const Lattice& lattice, const BiasingFst& bias);

struct BestPath {
  std::vector<std::string> tokens;
  double cost = 0.0;
  std::vector<int> arc_indices;  // arcs of the winning path, in order
};

/// Minimum-cost path; ties broken toward the lexicographically smallest
/// token sequence.
BestPath best_path(const Lattice& lattice);

/// Forward-backward arc posteriors, indexed like lattice.arcs().
/// posterior(arc) = P(paths through arc) / P(all paths), P = exp(-cost).
std::vector<double> word_posteriors(const Lattice& lattice);

/// Mean posterior over the best path's arcs; 0 for an empty path.
double best_path_confidence(const Lattice& lattice,
                            const BestPath& path,
                            const std::vector<double>& posteriors);

}  // namespace atc2
