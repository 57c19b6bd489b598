#include "qscore/eval.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <set>
#include <string>

#include "qscore/error.hpp"

namespace qscore {

namespace {

constexpr std::size_t kMaxImages = 2'000'000;

struct AtomPlan {
  const Atom* atom;
  const Relation* rel;  // may be null (treated as empty)
};

class HomSearch {
 public:
  HomSearch(const Query& q, const Instance& d, std::vector<Witness>& out)
      : d_(d), out_(out) {
    for (const auto& a : q.atoms()) {
      const Relation* rel = d.find_relation(a.relation);
      if (rel && rel->arity != static_cast<int>(a.terms.size()))
        throw DomainError("atom " + a.relation + "/" +
                          std::to_string(a.terms.size()) +
                          " does not match relation arity " +
                          std::to_string(rel->arity));
      plans_.push_back({&a, rel});
    }
    // Cheap join-order heuristic: fewest candidate tuples first.
    std::stable_sort(plans_.begin(), plans_.end(),
                     [](const AtomPlan& a, const AtomPlan& b) {
                       std::size_t ca = a.rel ? a.rel->tuple_indices.size() : 0;
                       std::size_t cb = b.rel ? b.rel->tuple_indices.size() : 0;
                       return ca < cb;
                     });
  }

  void run() { rec(0); }

 private:
  void rec(std::size_t i) {
    if (i == plans_.size()) {
      record();
      return;
    }
    const AtomPlan& pl = plans_[i];
    if (!pl.rel) return;  // unknown relation: empty, no match
    for (int ti : pl.rel->tuple_indices) {
      const Tuple& t = d_.tuples[ti];
      std::vector<std::string> bound;
      bool ok = true;
      for (std::size_t p = 0; p < pl.atom->terms.size(); ++p) {
        const Term& term = pl.atom->terms[p];
        if (term.kind == Term::Kind::Const) {
          if (t.values[p] != term.text) { ok = false; break; }
        } else {
          auto it = env_.find(term.text);
          if (it == env_.end()) {
            env_.emplace(term.text, t.values[p]);
            bound.push_back(term.text);
          } else if (it->second != t.values[p]) {
            ok = false;
            break;
          }
        }
      }
      if (ok) {
        chosen_.push_back(ti);
        rec(i + 1);
        chosen_.pop_back();
      }
      for (const auto& v : bound) env_.erase(v);
    }
  }

  void record() {
    if (out_.size() >= kMaxImages)
      throw CapExceededError("witness enumeration exceeded " +
                             std::to_string(kMaxImages) + " images");
    Witness w;
    std::set<int> idx(chosen_.begin(), chosen_.end());
    for (int ti : idx) {
      w.tuple_indices.push_back(ti);
      const Tuple& t = d_.tuples[ti];
      if (t.endo) w.endo_mask |= 1ull << t.endo_index;
    }
    out_.push_back(std::move(w));
  }

  const Instance& d_;
  std::vector<Witness>& out_;
  std::vector<AtomPlan> plans_;
  std::map<std::string, std::string> env_;
  std::vector<int> chosen_;
};

// Minimal witnesses of reachability are the simple paths from source to
// target (a path revisiting a node, or continuing past the target,
// contains a shorter witness).
class PathSearch {
 public:
  PathSearch(const Query& q, const Instance& d, std::vector<Witness>& out)
      : d_(d), out_(out), target_(q.target()) {
    const Relation* rel = d.find_relation(q.edge_relation());
    if (rel && rel->arity != 2)
      throw DomainError("reachability needs a binary edge relation; " +
                        q.edge_relation() + " has arity " +
                        std::to_string(rel->arity));
    if (rel)
      for (int ti : rel->tuple_indices)
        adj_[d.tuples[ti].values[0]].push_back(ti);
    source_ = q.source();
  }

  void run() {
    if (source_ == target_) {
      out_.push_back(Witness{});  // trivially reachable in every world
      return;
    }
    visited_.insert(source_);
    rec(source_);
  }

 private:
  void rec(const std::string& u) {
    auto it = adj_.find(u);
    if (it == adj_.end()) return;
    for (int ti : it->second) {
      const std::string& v = d_.tuples[ti].values[1];
      path_.push_back(ti);
      if (v == target_) {
        record();
      } else if (!visited_.count(v)) {
        visited_.insert(v);
        rec(v);
        visited_.erase(v);
      }
      path_.pop_back();
    }
  }

  void record() {
    if (out_.size() >= kMaxImages)
      throw CapExceededError("witness enumeration exceeded " +
                             std::to_string(kMaxImages) + " images");
    Witness w;
    for (int ti : path_) {
      w.tuple_indices.push_back(ti);
      const Tuple& t = d_.tuples[ti];
      if (t.endo) w.endo_mask |= 1ull << t.endo_index;
    }
    std::sort(w.tuple_indices.begin(), w.tuple_indices.end());
    out_.push_back(std::move(w));
  }

  const Instance& d_;
  std::vector<Witness>& out_;
  std::string source_, target_;
  std::map<std::string, std::vector<int>> adj_;
  std::set<std::string> visited_;
  std::vector<int> path_;
};

}  // namespace

Evaluator::Evaluator(const Query& q, const Instance& d) : d_(&d) {
  n_ = d.endo_count();
  if (n_ > 64) throw CapExceededError("more than 64 endogenous tuples");

  std::vector<Witness> raw;
  if (q.kind() == Query::Kind::Reach) {
    PathSearch(q, d, raw).run();
  } else {
    HomSearch(q, d, raw).run();
  }

  // Keep only witnesses minimal on their endogenous part; keep every
  // distinct support among those (block decomposition walks supports).
  std::stable_sort(raw.begin(), raw.end(), [](const Witness& a, const Witness& b) {
    return std::popcount(a.endo_mask) < std::popcount(b.endo_mask);
  });
  std::set<std::uint64_t> kept_masks;
  std::set<std::vector<int>> kept_supports;
  for (auto& w : raw) {
    bool dominated = false;
    for (std::uint64_t m : kept_masks)
      if (m != w.endo_mask && (m & ~w.endo_mask) == 0) {
        dominated = true;
        break;
      }
    if (dominated) continue;
    if (kept_masks.insert(w.endo_mask).second) masks_.push_back(w.endo_mask);
    if (kept_supports.insert(w.tuple_indices).second)
      images_.push_back(std::move(w));
  }
  std::sort(masks_.begin(), masks_.end());
}

bool Evaluator::eval(std::uint64_t world_mask) const {
  for (std::uint64_t m : masks_)
    if ((m & ~world_mask) == 0) return true;
  return false;
}

std::pair<bool, std::uint64_t> Evaluator::sat_and_critical(
    std::uint64_t world_mask) const {
  bool sat = false;
  std::uint64_t crit = ~0ull;
  for (std::uint64_t m : masks_) {
    if ((m & ~world_mask) == 0) {
      sat = true;
      crit &= m;
      if (crit == 0) break;
    }
  }
  return {sat, sat ? crit : 0};
}

bool evaluate(const Query& q, const Instance& d,
              const std::vector<std::string>& world_ids) {
  return Evaluator(q, d).eval(world_mask_from_ids(d, world_ids));
}

std::uint64_t world_mask_from_ids(const Instance& d,
                                  const std::vector<std::string>& ids) {
  std::uint64_t mask = 0;
  for (const auto& id : ids) {
    const Tuple& t = d.tuple_by_id(id);
    if (!t.endo)
      throw DomainError("world contains exogenous tuple " + id +
                        "; worlds range over endogenous tuples");
    mask |= 1ull << t.endo_index;
  }
  return mask;
}

std::vector<std::string> world_ids_from_mask(const Instance& d,
                                             std::uint64_t mask) {
  std::vector<std::string> ids;
  for (int ti : d.endo_tuple_indices()) {
    const Tuple& t = d.tuples[ti];
    if (mask & (1ull << t.endo_index)) ids.push_back(t.id);
  }
  return ids;
}

}  // namespace qscore
