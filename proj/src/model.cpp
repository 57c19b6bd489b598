#include "qscore/model.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qscore/error.hpp"

namespace qscore {

using nlohmann::json;

bool Instance::has_relation(const std::string& name) const {
  return find_relation(name) != nullptr;
}

const Relation* Instance::find_relation(const std::string& name) const {
  for (const auto& r : relations)
    if (r.name == name) return &r;
  return nullptr;
}

const Tuple& Instance::tuple_by_id(const std::string& id) const {
  return tuples[tuple_index(id)];
}

int Instance::tuple_index(const std::string& id) const {
  auto it = id_index_.find(id);
  if (it == id_index_.end()) throw DomainError("unknown tuple id: " + id);
  return it->second;
}

Instance Instance::subinstance(const std::vector<std::string>& ids) const {
  std::set<int> keep;
  for (const auto& id : ids) keep.insert(tuple_index(id));

  Instance sub;
  for (const auto& rel : relations) {
    Relation r;
    r.name = rel.name;
    r.arity = rel.arity;
    sub.relations.push_back(std::move(r));
  }
  for (const auto& t : tuples) {
    if (!keep.count(t.load_index)) continue;
    Tuple nt;
    nt.id = t.id;
    nt.values = t.values;
    nt.endo = t.endo;
    nt.p = t.p;
    nt.relation_index = t.relation_index;
    sub.tuples.push_back(std::move(nt));
  }
  sub.finalize();
  return sub;
}

void Instance::finalize() {
  id_index_.clear();
  endo_order_.clear();
  endo_count_ = 0;
  for (auto& rel : relations) rel.tuple_indices.clear();

  std::set<std::string> rel_names;
  for (const auto& rel : relations) {
    if (!rel_names.insert(rel.name).second)
      throw DomainError("duplicate relation name: " + rel.name);
    if (rel.arity < 0) throw DomainError("negative arity: " + rel.name);
  }

  std::vector<std::set<std::vector<std::string>>> seen(relations.size());
  for (int i = 0; i < static_cast<int>(tuples.size()); ++i) {
    Tuple& t = tuples[i];
    t.load_index = i;
    if (t.relation_index < 0 ||
        t.relation_index >= static_cast<int>(relations.size()))
      throw DomainError("tuple " + t.id + " has no owning relation");
    Relation& rel = relations[t.relation_index];
    if (static_cast<int>(t.values.size()) != rel.arity)
      throw DomainError("tuple " + t.id + " has " +
                        std::to_string(t.values.size()) + " values; relation " +
                        rel.name + " has arity " + std::to_string(rel.arity));
    if (!seen[t.relation_index].insert(t.values).second)
      throw DomainError("duplicate tuple values in relation " + rel.name +
                        " (tuple " + t.id + "); instances are sets");
    if (!id_index_.emplace(t.id, i).second)
      throw DomainError("duplicate tuple id: " + t.id);
    rel.tuple_indices.push_back(i);
    if (t.endo) {
      t.endo_index = endo_count_++;
      endo_order_.push_back(i);
    } else {
      t.endo_index = -1;
    }
  }
}

json Instance::to_json() const {
  json rels = json::array();
  for (const auto& rel : relations) {
    json jr;
    jr["name"] = rel.name;
    jr["arity"] = rel.arity;
    json jts = json::array();
    for (int ti : rel.tuple_indices) {
      const Tuple& t = tuples[ti];
      json jt;
      jt["id"] = t.id;
      jt["values"] = t.values;
      jt["endogenous"] = t.endo;
      if (t.p) jt["p"] = format_fraction(*t.p);
      jts.push_back(std::move(jt));
    }
    jr["tuples"] = std::move(jts);
    rels.push_back(std::move(jr));
  }
  return json{{"relations", std::move(rels)}};
}

Instance load_instance(const json& doc) {
  if (!doc.is_object() || !doc.contains("relations") ||
      !doc["relations"].is_array())
    throw ParseError("instance document must be an object with a 'relations' array");

  Instance d;
  for (const auto& jr : doc["relations"]) {
    if (!jr.is_object() || !jr.contains("name") || !jr.contains("arity"))
      throw ParseError("each relation needs 'name' and 'arity'");
    Relation rel;
    rel.name = jr["name"].get<std::string>();
    if (!jr["arity"].is_number_integer())
      throw ParseError("relation " + rel.name + ": 'arity' must be an integer");
    rel.arity = jr["arity"].get<int>();
    int rel_index = static_cast<int>(d.relations.size());
    d.relations.push_back(rel);

    if (!jr.contains("tuples")) continue;
    if (!jr["tuples"].is_array())
      throw ParseError("relation " + rel.name + ": 'tuples' must be an array");
    for (const auto& jt : jr["tuples"]) {
      if (!jt.is_object() || !jt.contains("id") || !jt.contains("values"))
        throw ParseError("relation " + rel.name +
                         ": each tuple needs 'id' and 'values'");
      Tuple t;
      t.id = jt["id"].get<std::string>();
      if (!jt["values"].is_array())
        throw ParseError("tuple " + t.id + ": 'values' must be an array");
      for (const auto& v : jt["values"]) {
        if (!v.is_string())
          throw ParseError("tuple " + t.id + ": values must be strings");
        t.values.push_back(v.get<std::string>());
      }
      t.endo = jt.value("endogenous", true);
      if (jt.contains("p")) {
        Rational p = parse_rational(jt["p"].get<std::string>());
        if (p < 0 || p > 1)
          throw DomainError("tuple " + t.id + ": p outside [0,1]");
        if (!t.endo && p != 1)
          throw DomainError("tuple " + t.id + ": exogenous tuples have p = 1");
        t.p = p;
      }
      t.relation_index = rel_index;
      d.tuples.push_back(std::move(t));
    }
  }
  d.finalize();
  return d;
}

Instance load_instance_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  return load_instance(doc);
}

Instance load_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_instance_text(buf.str());
}

}  // namespace qscore
