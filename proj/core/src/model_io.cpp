#include "mc2a/model_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "mc2a/error.hpp"

namespace mc2a {

namespace {

// Line reader that strips comments and blank lines and remembers line numbers.
class LineReader {
 public:
  LineReader(std::istream& is, std::string source, char comment)
      : is_(is), source_(std::move(source)), comment_(comment) {}

  bool next(std::istringstream& out) {
    std::string line;
    while (std::getline(is_, line)) {
      ++line_;
      if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
      std::size_t first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos) continue;
      if (comment_ != 0 && line[first] == comment_ &&
          (first + 1 == line.size() || std::isspace(static_cast<unsigned char>(line[first + 1])))) {
        continue;
      }
      out.clear();
      out.str(line);
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, line_, what); }
  [[noreturn]] void too_large(const std::string& what) const {
    throw CapacityError(source_ + ":" + std::to_string(line_) + ": " + what);
  }
  int line() const { return line_; }

 private:
  std::istream& is_;
  std::string source_;
  char comment_;
  int line_ = 0;
};

template <typename T>
T read_value(std::istringstream& ls, const LineReader& r, const char* what) {
  T v{};
  if (!(ls >> v)) r.fail(std::string("expected ") + what);
  return v;
}

void expect_end_of_line(std::istringstream& ls, const LineReader& r) {
  std::string extra;
  if (ls >> extra) r.fail("unexpected token '" + extra + "'");
}

struct BnVar {
  std::string name;
  int card = 0;
  std::vector<std::string> parents;
};

}  // namespace

GraphModel parse_bayes_net(std::istream& is, const std::string& source) {
  LineReader r(is, source, 0);
  std::istringstream ls;
  if (!r.next(ls)) r.fail("empty Bayes net file");
  std::string tag;
  ls >> tag;
  if (tag != "bayesnet") r.fail("expected 'bayesnet' header");

  std::vector<BnVar> vars;
  std::map<std::string, RvId> ids;
  std::map<std::string, std::vector<double>> tables;
  bool ended = false;
  while (r.next(ls)) {
    ls >> tag;
    if (tag == "var") {
      BnVar v;
      v.name = read_value<std::string>(ls, r, "variable name");
      v.card = read_value<int>(ls, r, "cardinality");
      if (v.card < 2) r.fail("cardinality must be at least 2");
      if (v.card > kMaxCardinality) r.too_large("cardinality exceeds the maximum distribution size of 256");
      std::string p;
      while (ls >> p) v.parents.push_back(p);
      if (ids.count(v.name)) r.fail("duplicate variable '" + v.name + "'");
      ids[v.name] = static_cast<RvId>(vars.size());
      vars.push_back(std::move(v));
    } else if (tag == "table") {
      const auto name = read_value<std::string>(ls, r, "variable name");
      const auto mode = read_value<std::string>(ls, r, "prob or energy");
      expect_end_of_line(ls, r);
      auto it = ids.find(name);
      if (it == ids.end()) r.fail("table for undeclared variable '" + name + "'");
      if (mode != "prob" && mode != "energy") r.fail("table mode must be 'prob' or 'energy'");
      if (tables.count(name)) r.fail("duplicate table for '" + name + "'");
      const BnVar& v = vars[it->second];
      std::size_t rows = 1;
      for (const auto& p : v.parents) {
        auto pit = ids.find(p);
        if (pit == ids.end()) r.fail("unknown parent '" + p + "' of '" + name + "'");
        rows *= static_cast<std::size_t>(vars[pit->second].card);
      }
      std::vector<double> table;
      table.reserve(rows * static_cast<std::size_t>(v.card));
      for (std::size_t row = 0; row < rows; ++row) {
        if (!r.next(ls)) r.fail("table for '" + name + "' ends early");
        double sum = 0.0;
        for (int s = 0; s < v.card; ++s) {
          const double x = read_value<double>(ls, r, "table entry");
          if (!std::isfinite(x)) r.fail("non-finite table entry");
          if (mode == "prob") {
            if (x <= 0.0) r.fail("probability must be positive (energies must stay finite)");
            sum += x;
            table.push_back(-std::log(x));
          } else {
            table.push_back(x);
          }
        }
        expect_end_of_line(ls, r);
        if (mode == "prob" && std::abs(sum - 1.0) > 1e-6) r.fail("probability row does not sum to 1");
      }
      tables[name] = std::move(table);
    } else if (tag == "end") {
      ended = true;
      break;
    } else {
      r.fail("unknown keyword '" + tag + "'");
    }
  }
  if (!ended) r.fail("missing 'end'");

  std::vector<RandomVariable> rvs;
  std::vector<std::vector<RvId>> parents;
  std::vector<std::vector<double>> cpts;
  for (const auto& v : vars) {
    auto t = tables.find(v.name);
    if (t == tables.end()) throw InputError(source + ": no table for variable '" + v.name + "'");
    rvs.push_back({static_cast<RvId>(rvs.size()), v.card, v.name});
    std::vector<RvId> ps;
    for (const auto& p : v.parents) ps.push_back(ids.at(p));
    parents.push_back(std::move(ps));
    cpts.push_back(t->second);
  }
  return make_bayes_net(std::move(rvs), std::move(parents), std::move(cpts));
}

namespace {

struct GraphFile {
  std::string kind;
  std::size_t nodes = 0;
  std::size_t declared_edges = 0;
  int card = 2;
  double penalty = kMisPenalty;
  std::vector<WeightedEdge> edges;
  std::vector<std::vector<double>> edge_tables;
  std::map<std::size_t, std::vector<double>> unary;
};

GraphFile read_graph_file(std::istream& is, const std::string& source) {
  LineReader r(is, source, 'c');
  std::istringstream ls;
  GraphFile g;
  bool have_header = false;
  std::string tag;
  while (r.next(ls)) {
    ls >> tag;
    if (tag == "p") {
      if (have_header) r.fail("duplicate 'p' line");
      g.kind = read_value<std::string>(ls, r, "problem kind");
      g.nodes = read_value<std::size_t>(ls, r, "node count");
      g.declared_edges = read_value<std::size_t>(ls, r, "edge count");
      expect_end_of_line(ls, r);
      static const char* kKinds[] = {"ising", "potts", "maxcut", "mis", "maxclique", "pairwise"};
      if (std::find(std::begin(kKinds), std::end(kKinds), g.kind) == std::end(kKinds)) {
        r.fail("unknown problem kind '" + g.kind + "'");
      }
      have_header = true;
      continue;
    }
    if (!have_header) r.fail("expected 'p <kind> <nodes> <edges>' first");
    if (tag == "q") {
      g.card = read_value<int>(ls, r, "cardinality");
      if (g.card < 2) r.fail("cardinality must be at least 2");
      if (g.card > kMaxCardinality) r.too_large("cardinality exceeds the maximum distribution size of 256");
      expect_end_of_line(ls, r);
    } else if (tag == "l") {
      g.penalty = read_value<double>(ls, r, "penalty");
      expect_end_of_line(ls, r);
    } else if (tag == "e") {
      const auto u = read_value<std::size_t>(ls, r, "edge endpoint");
      const auto v = read_value<std::size_t>(ls, r, "edge endpoint");
      if (u < 1 || v < 1 || u > g.nodes || v > g.nodes) r.fail("edge endpoint out of range");
      if (u == v) r.fail("self-loop");
      WeightedEdge e{static_cast<RvId>(u - 1), static_cast<RvId>(v - 1), 1.0};
      if (g.kind == "pairwise") {
        std::vector<double> t(static_cast<std::size_t>(g.card * g.card));
        for (auto& x : t) x = read_value<double>(ls, r, "edge table entry");
        g.edge_tables.push_back(std::move(t));
      } else {
        double w = 1.0;
        if (ls >> w) {
          if (!std::isfinite(w)) r.fail("non-finite weight");
          e.w = w;
        }
      }
      expect_end_of_line(ls, r);
      g.edges.push_back(e);
    } else if (tag == "n") {
      const auto v = read_value<std::size_t>(ls, r, "node id");
      if (v < 1 || v > g.nodes) r.fail("node id out of range");
      std::vector<double> vals;
      double x = 0.0;
      while (ls >> x) vals.push_back(x);
      const std::size_t want = g.kind == "ising" ? 1 : static_cast<std::size_t>(g.card);
      if (vals.size() != want) r.fail("expected " + std::to_string(want) + " unary values");
      g.unary[v - 1] = std::move(vals);
    } else {
      r.fail("unknown line type '" + tag + "'");
    }
  }
  if (!have_header) r.fail("missing 'p' line");
  if (g.edges.size() != g.declared_edges) {
    throw ParseError(source, r.line(),
                     "header declares " + std::to_string(g.declared_edges) + " edges, found " +
                         std::to_string(g.edges.size()));
  }
  return g;
}

}  // namespace

GraphInstance read_graph_instance(std::istream& is, const std::string& source) {
  GraphFile g = read_graph_file(is, source);
  return {g.kind, g.nodes, g.edges};
}

GraphModel parse_pairwise(std::istream& is, const std::string& source) {
  GraphFile g = read_graph_file(is, source);
  const std::size_t n = g.nodes;
  if (g.kind == "maxcut") return make_maxcut(n, g.edges);
  if (g.kind == "mis") return make_mis(n, g.edges, g.penalty);
  if (g.kind == "maxclique") return make_maxclique(n, g.edges, g.penalty);
  if (g.kind == "ising") {
    std::vector<double> field(n, 0.0);
    for (const auto& [v, vals] : g.unary) field[v] = vals[0];
    return make_ising(n, g.edges, field);
  }
  std::vector<std::vector<double>> unary;
  if (!g.unary.empty()) {
    unary.assign(n, std::vector<double>(static_cast<std::size_t>(g.card), 0.0));
    for (const auto& [v, vals] : g.unary) unary[v] = vals;
  }
  if (g.kind == "potts") return make_potts(n, g.card, g.edges, unary);
  std::vector<RandomVariable> rvs(n);
  for (std::size_t i = 0; i < n; ++i) rvs[i] = {static_cast<RvId>(i), g.card, {}};
  std::vector<std::pair<RvId, RvId>> edges;
  for (const auto& e : g.edges) edges.emplace_back(e.u, e.v);
  return make_pairwise(std::move(rvs), std::move(edges), std::move(g.edge_tables), std::move(unary));
}

GraphModel parse_rbm(std::istream& is, const std::string& source) {
  LineReader r(is, source, 0);
  std::istringstream ls;
  if (!r.next(ls)) r.fail("empty RBM file");
  std::string tag;
  ls >> tag;
  if (tag != "rbm") r.fail("expected 'rbm <V> <H>' header");
  const auto nv = read_value<std::size_t>(ls, r, "visible count");
  const auto nh = read_value<std::size_t>(ls, r, "hidden count");
  expect_end_of_line(ls, r);
  if (nv == 0 || nh == 0) r.fail("RBM needs at least one visible and one hidden unit");
  auto read_row = [&](std::size_t count, std::vector<double>& out, const char* what) {
    if (!r.next(ls)) r.fail(std::string("missing ") + what);
    for (std::size_t k = 0; k < count; ++k) {
      const double x = read_value<double>(ls, r, what);
      if (!std::isfinite(x)) r.fail("non-finite value");
      out.push_back(x);
    }
    expect_end_of_line(ls, r);
  };
  std::vector<double> w;
  w.reserve(nv * nh);
  for (std::size_t v = 0; v < nv; ++v) read_row(nh, w, "weight row");
  std::vector<double> bv, bh;
  read_row(nv, bv, "visible biases");
  read_row(nh, bh, "hidden biases");
  return make_rbm(nv, nh, w, bv, bh);
}

GraphModel load_model(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open '" + path + "'");
  std::string first;
  {
    std::ifstream peek(path);
    std::string line;
    while (std::getline(peek, line)) {
      std::istringstream ls(line);
      if (ls >> first && first[0] != '#') break;
      first.clear();
    }
  }
  if (first == "bayesnet") return parse_bayes_net(f, path);
  if (first == "rbm") return parse_rbm(f, path);
  if (first == "p" || first == "c") return parse_pairwise(f, path);
  throw InputError("'" + path + "': unrecognized model format");
}

void write_bayes_net(std::ostream& os, const GraphModel& model) {
  if (model.kind() != ModelKind::kBayesNet) throw InputError("write_bayes_net needs a Bayes net");
  os << "bayesnet\n";
  auto name = [&](RvId i) {
    const auto& n = model.rv(i).name;
    return n.empty() ? "x" + std::to_string(i) : n;
  };
  for (RvId i = 0; i < model.num_rvs(); ++i) {
    os << "var " << name(i) << ' ' << model.cardinality(i);
    for (RvId p : model.parents(i)) os << ' ' << name(p);
    os << "\n";
  }
  os << std::setprecision(17);
  for (RvId i = 0; i < model.num_rvs(); ++i) {
    // The CPT factor of RV i is the one whose last scope entry is i.
    for (std::size_t fi : model.factors_of(i)) {
      const Factor& f = model.factors()[fi];
      if (f.scope.back() != i) continue;
      os << "table " << name(i) << " energy\n";
      const auto card = static_cast<std::size_t>(model.cardinality(i));
      for (std::size_t k = 0; k < f.table.size(); ++k) {
        os << f.table[k] << ((k + 1) % card == 0 ? "\n" : " ");
      }
      break;
    }
  }
  os << "end\n";
}

void write_graph(std::ostream& os, const std::string& kind, std::size_t n,
                 const std::vector<WeightedEdge>& edges) {
  os << "p " << kind << ' ' << n << ' ' << edges.size() << "\n" << std::setprecision(17);
  for (const auto& e : edges) {
    os << "e " << e.u + 1 << ' ' << e.v + 1;
    if (e.w != 1.0) os << ' ' << e.w;
    os << "\n";
  }
}

}  // namespace mc2a
