#include "qscore/worlds.hpp"

#include <bit>

#include <json.hpp>

#include "qscore/error.hpp"

namespace qscore {

using nlohmann::json;

namespace {

void check_cap(int free_bits, int max_endo, const char* what) {
  if (free_bits > max_endo)
    throw CapExceededError(std::string(what) + " needs 2^" +
                           std::to_string(free_bits) +
                           " worlds; cap is 2^" + std::to_string(max_endo) +
                           " (raise the cap explicitly to proceed)");
}

}  // namespace

PdbDistribution PdbDistribution::uniform_half_tid(const Instance& d) {
  PdbDistribution p;
  p.d_ = &d;
  p.kind_ = Kind::Tid;
  p.product_form_ = true;
  p.probs_.assign(d.endo_count(), Rational(1, 2));
  return p;
}

PdbDistribution PdbDistribution::tid_from_instance(const Instance& d) {
  PdbDistribution p = uniform_half_tid(d);
  for (int ti : d.endo_tuple_indices()) {
    const Tuple& t = d.tuples[ti];
    if (t.p) p.probs_[t.endo_index] = *t.p;
  }
  return p;
}

PdbDistribution PdbDistribution::load_explicit(const Instance& d,
                                               const json& doc) {
  if (!doc.is_object() || !doc.contains("worlds") || !doc["worlds"].is_array())
    throw ParseError("world document must be an object with a 'worlds' array");
  PdbDistribution p;
  p.d_ = &d;
  p.kind_ = Kind::Explicit;
  p.product_form_ = false;
  Rational total = 0;
  for (const auto& jw : doc["worlds"]) {
    if (!jw.is_object() || !jw.contains("tuples") || !jw.contains("p"))
      throw ParseError("each world needs 'tuples' and 'p'");
    std::vector<std::string> ids = jw["tuples"].get<std::vector<std::string>>();
    std::uint64_t mask = world_mask_from_ids(d, ids);
    Rational prob = parse_rational(jw["p"].get<std::string>());
    if (prob < 0) throw DomainError("negative world probability");
    if (!p.worlds_.emplace(mask, prob).second)
      throw DomainError("world listed twice in document");
    total += prob;
  }
  if (total != 1)
    throw DomainError("world probabilities sum to " + format_fraction(total) +
                      ", expected 1");
  return p;
}

PdbDistribution PdbDistribution::load_explicit_text(const Instance& d,
                                                    const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  return load_explicit(d, doc);
}

Rational PdbDistribution::mask_probability(std::uint64_t mask) const {
  // product form only
  Rational prob = 1;
  for (int i = 0; i < d_->endo_count(); ++i) {
    std::uint64_t bit = 1ull << i;
    Rational pi = (forced_in_ & bit) ? Rational(1)
                  : (forced_out_ & bit) ? Rational(0)
                                        : probs_[i];
    prob *= (mask & bit) ? pi : Rational(1) - pi;
    if (prob == 0) return prob;
  }
  return prob;
}

Rational PdbDistribution::world_probability(
    const std::vector<std::string>& world_ids) const {
  std::uint64_t mask = world_mask_from_ids(*d_, world_ids);
  if (product_form_) return mask_probability(mask);
  auto it = worlds_.find(mask);
  return it == worlds_.end() ? Rational(0) : it->second;
}

Rational PdbDistribution::query_probability(const Query& q, int max_endo) const {
  Evaluator ev(q, *d_);
  if (!product_form_) {
    Rational total = 0;
    for (const auto& [mask, prob] : worlds_)
      if (ev.eval(mask)) total += prob;
    return total;
  }
  int n = d_->endo_count();
  check_cap(n - std::popcount(forced_in_ | forced_out_), max_endo,
            "query probability");
  // DFS over undetermined bits, multiplying marginals along the way; one
  // O(1) rational multiplication per node.
  Rational total = 0;
  auto rec = [&](auto&& self, int bit, std::uint64_t mask, Rational acc) -> void {
    if (acc == 0) return;
    if (bit < 0) {
      if (ev.eval(mask)) total += acc;
      return;
    }
    std::uint64_t b = 1ull << bit;
    if (forced_in_ & b) {
      self(self, bit - 1, mask | b, acc);
    } else if (forced_out_ & b) {
      self(self, bit - 1, mask, acc);
    } else {
      const Rational& pi = probs_[bit];
      self(self, bit - 1, mask, acc * (Rational(1) - pi));
      self(self, bit - 1, mask | b, acc * pi);
    }
  };
  rec(rec, n - 1, 0, Rational(1));
  return total;
}

Rational PdbDistribution::tuple_marginal(const std::string& id) const {
  const Tuple& t = d_->tuple_by_id(id);
  if (!t.endo) return Rational(1);  // exogenous facts hold in every world
  std::uint64_t bit = 1ull << t.endo_index;
  if (product_form_) {
    if (forced_in_ & bit) return Rational(1);
    if (forced_out_ & bit) return Rational(0);
    return probs_[t.endo_index];
  }
  Rational total = 0;
  for (const auto& [mask, prob] : worlds_)
    if (mask & bit) total += prob;
  return total;
}

PdbDistribution PdbDistribution::intervene(const std::string& id,
                                           Intervention dir) const {
  const Tuple& t = d_->tuple_by_id(id);
  if (!t.endo)
    throw DomainError("cannot intervene on exogenous tuple " + id +
                      "; it is present in every world");
  std::uint64_t bit = 1ull << t.endo_index;
  PdbDistribution out = *this;
  out.kind_ = Kind::Explicit;  // a pushforward, even when stored symbolically
  if (product_form_) {
    if (dir == Intervention::In) {
      out.forced_in_ |= bit;
      out.forced_out_ &= ~bit;
    } else {
      out.forced_out_ |= bit;
      out.forced_in_ &= ~bit;
    }
    return out;
  }
  out.worlds_.clear();
  for (const auto& [mask, prob] : worlds_) {
    std::uint64_t nm = dir == Intervention::In ? (mask | bit) : (mask & ~bit);
    out.worlds_[nm] += prob;
  }
  return out;
}

json PdbDistribution::to_json(int max_endo) const {
  json out;
  json worlds = json::array();
  auto emit = [&](std::uint64_t mask, const Rational& p) {
    if (p == 0) return;
    json jw;
    jw["tuples"] = world_ids_from_mask(*d_, mask);
    jw["p"] = format_fraction(p);
    worlds.push_back(std::move(jw));
  };
  if (!product_form_) {
    for (const auto& [mask, prob] : worlds_) emit(mask, prob);  // map: ascending
  } else {
    int n = d_->endo_count();
    check_cap(n - std::popcount(forced_in_ | forced_out_), max_endo,
              "materializing the distribution");
    // Highest bit first, absent branch first: leaves arrive in ascending
    // bitmask order.
    auto rec = [&](auto&& self, int bit, std::uint64_t mask, Rational acc) -> void {
      if (acc == 0) return;
      if (bit < 0) {
        emit(mask, acc);
        return;
      }
      std::uint64_t b = 1ull << bit;
      if (forced_in_ & b) {
        self(self, bit - 1, mask | b, acc);
      } else if (forced_out_ & b) {
        self(self, bit - 1, mask, acc);
      } else {
        const Rational& pi = probs_[bit];
        self(self, bit - 1, mask, acc * (Rational(1) - pi));
        self(self, bit - 1, mask | b, acc * pi);
      }
    };
    rec(rec, n - 1, 0, Rational(1));
  }
  out["worlds"] = std::move(worlds);
  return out;
}

}  // namespace qscore
