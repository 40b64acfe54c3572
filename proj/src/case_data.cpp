#include "feasproj/case_data.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace feasproj {

MissingTable::MissingTable(const std::string& t)
    : CaseError("missing table: " + t), table(t) {}

MalformedRow::MalformedRow(const std::string& t, int l, const std::string& w)
    : CaseError("malformed row in " + t + " line " + std::to_string(l) + ": " + w),
      table(t),
      line(l) {}

UnknownBusReference::UnknownBusReference(int i)
    : CaseError("unknown bus reference: " + std::to_string(i)), id(i) {}

MultipleSlackBuses::MultipleSlackBuses() : CaseError("multiple slack buses") {}

NoSlackBus::NoSlackBus() : CaseError("no slack bus") {}

ResultingEmptyBox::ResultingEmptyBox(const std::string& w)
    : CaseError("perturbation empties a bound box: " + w) {}

Index CaseData::bus_index(int id) const {
  for (Index i = 0; i < static_cast<Index>(buses.size()); ++i)
    if (buses[i].id == id) return i;
  throw UnknownBusReference(id);
}

Index CaseData::slack_index() const {
  for (Index i = 0; i < static_cast<Index>(buses.size()); ++i)
    if (buses[i].type == BusType::Slack) return i;
  throw NoSlackBus();
}

namespace {

struct RawTable {
  std::vector<std::vector<double>> rows;
  std::vector<int> lines;  // source line of each row
};

// Reads MATPOWER-style text: scalar assignments `name = v;` and matrix
// assignments `name = [ rows ];` with whitespace-separated numeric rows.
struct RawCase {
  std::map<std::string, double> scalars;
  std::map<std::string, RawTable> tables;
};

std::string strip_prefix(std::string s) {
  auto dot = s.rfind('.');
  if (dot != std::string::npos) s = s.substr(dot + 1);
  return s;
}

bool parse_numbers(const std::string& text, std::vector<double>* out) {
  out->clear();
  const char* p = text.c_str();
  char* end = nullptr;
  while (*p) {
    while (*p && (std::isspace(static_cast<unsigned char>(*p)) || *p == ',' || *p == ';'))
      ++p;
    if (!*p) break;
    double v = std::strtod(p, &end);
    if (end == p) return false;
    out->push_back(v);
    p = end;
  }
  return true;
}

RawCase scan_case(std::istream& in) {
  RawCase rc;
  std::string line;
  std::string table;  // active table name, empty when outside
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto pc = line.find('%');
    if (pc != std::string::npos) line.erase(pc);
    if (!table.empty()) {
      std::string row = line;
      auto close = row.find(']');
      bool ends = close != std::string::npos;
      if (ends) row.erase(close);
      std::stringstream chunks(row);
      std::string chunk;
      while (std::getline(chunks, chunk, ';')) {
        std::vector<double> vals;
        if (!parse_numbers(chunk, &vals))
          throw MalformedRow(table, lineno, "non-numeric data");
        if (!vals.empty()) {
          rc.tables[table].rows.push_back(vals);
          rc.tables[table].lines.push_back(lineno);
        }
      }
      if (ends) table.clear();
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string lhs = line.substr(0, eq);
    // trim
    auto b = lhs.find_first_not_of(" \t");
    auto e = lhs.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    lhs = strip_prefix(lhs.substr(b, e - b + 1));
    std::string rhs = line.substr(eq + 1);
    auto open = rhs.find('[');
    if (open != std::string::npos) {
      table = lhs;
      rc.tables[table];  // create
      std::string rest = rhs.substr(open + 1);
      auto close = rest.find(']');
      bool ends = close != std::string::npos;
      if (ends) rest.erase(close);
      std::stringstream chunks(rest);
      std::string chunk;
      while (std::getline(chunks, chunk, ';')) {
        std::vector<double> vals;
        if (!parse_numbers(chunk, &vals))
          throw MalformedRow(table, lineno, "non-numeric data");
        if (!vals.empty()) {
          rc.tables[table].rows.push_back(vals);
          rc.tables[table].lines.push_back(lineno);
        }
      }
      if (ends) table.clear();
    } else {
      std::vector<double> vals;
      if (parse_numbers(rhs, &vals) && vals.size() == 1)
        rc.scalars[lhs] = vals[0];
    }
  }
  return rc;
}

const RawTable& require_table(const RawCase& rc, const std::string& name,
                              bool allow_empty = true) {
  auto it = rc.tables.find(name);
  if (it == rc.tables.end() || (!allow_empty && it->second.rows.empty()))
    throw MissingTable(name);
  return it->second;
}

}  // namespace

CaseData parse_case(std::istream& in, const std::string& name) {
  RawCase rc = scan_case(in);
  CaseData cd;
  cd.name = name;
  auto base_it = rc.scalars.find("baseMVA");
  if (base_it == rc.scalars.end()) throw MissingTable("baseMVA");
  cd.baseMVA = base_it->second;
  const double base = cd.baseMVA;

  const RawTable& bus = require_table(rc, "bus", /*allow_empty=*/false);
  int n_slack = 0;
  for (size_t i = 0; i < bus.rows.size(); ++i) {
    const auto& r = bus.rows[i];
    if (r.size() < 13) throw MalformedRow("bus", bus.lines[i], "expected 13 columns");
    Bus b;
    b.id = static_cast<int>(r[0]);
    int type = static_cast<int>(r[1]);
    b.type = type == 3 ? BusType::Slack : (type == 2 ? BusType::PV : BusType::PQ);
    if (b.type == BusType::Slack) ++n_slack;
    b.Pd = r[2] / base;
    b.Qd = r[3] / base;
    b.Gs = r[4] / base;
    b.Bs = r[5] / base;
    b.Vmax = r[11];
    b.Vmin = r[12];
    if (b.Vmin > b.Vmax)
      throw MalformedRow("bus", bus.lines[i], "Vmin > Vmax");
    cd.buses.push_back(b);
  }
  if (n_slack > 1) throw MultipleSlackBuses();
  if (n_slack == 0) throw NoSlackBus();

  const RawTable& gen = require_table(rc, "gen");
  for (size_t i = 0; i < gen.rows.size(); ++i) {
    const auto& r = gen.rows[i];
    if (r.size() < 10) throw MalformedRow("gen", gen.lines[i], "expected 10 columns");
    Generator g;
    g.bus = static_cast<int>(r[0]);
    g.Pset = r[1] / base;
    g.Qmax = r[3] / base;
    g.Qmin = r[4] / base;
    g.Vset = r[5];
    g.status = r[7] > 0.5;
    g.Pmax = r[8] / base;
    g.Pmin = r[9] / base;
    if (g.Pmin > g.Pmax || g.Qmin > g.Qmax)
      throw MalformedRow("gen", gen.lines[i], "empty generation box");
    cd.bus_index(g.bus);  // throws UnknownBusReference
    cd.generators.push_back(g);
  }

  const RawTable& branch = require_table(rc, "branch");
  for (size_t i = 0; i < branch.rows.size(); ++i) {
    const auto& r = branch.rows[i];
    if (r.size() < 11)
      throw MalformedRow("branch", branch.lines[i], "expected 11 columns");
    Branch b;
    b.from = static_cast<int>(r[0]);
    b.to = static_cast<int>(r[1]);
    b.r = r[2];
    b.x = r[3];
    b.b_charge = r[4];
    b.rateA = r[5] / base;
    b.tap = r[8] == 0 ? 1.0 : r[8];
    b.shift = r[9] * M_PI / 180.0;
    b.status = r[10] > 0.5;
    cd.bus_index(b.from);
    cd.bus_index(b.to);
    cd.branches.push_back(b);
  }

  const RawTable& cost = require_table(rc, "gencost");
  if (cost.rows.size() != cd.generators.size())
    throw MalformedRow("gencost", cost.lines.empty() ? 0 : cost.lines[0],
                       "one row per generator expected");
  for (size_t i = 0; i < cost.rows.size(); ++i) {
    const auto& r = cost.rows[i];
    if (r.size() < 7 || static_cast<int>(r[0]) != 2 || static_cast<int>(r[3]) != 3)
      throw MalformedRow("gencost", cost.lines[i],
                         "polynomial cost with 3 coefficients required");
    GenCost c;
    c.gen_index = static_cast<int>(i);
    c.c2 = r[4] * base * base;  // objective stays in cost units with Pg in p.u.
    c.c1 = r[5] * base;
    c.c0 = r[6];
    cd.costs.push_back(c);
  }
  return cd;
}

CaseData parse_case_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CaseError("cannot open case file: " + path);
  auto slash = path.find_last_of('/');
  std::string stem = slash == std::string::npos ? path : path.substr(slash + 1);
  auto dot = stem.rfind('.');
  if (dot != std::string::npos) stem.erase(dot);
  return parse_case(in, stem);
}

CaseData apply_perturbation(const CaseData& cd, const Perturbation& p) {
  if (p.shrink_max_pct < 0 || p.shrink_max_pct > 100 || p.grow_min_pct < 0 ||
      p.grow_min_pct > 100)
    throw CaseError("perturbation percentages must be in [0, 100]");
  CaseData out = cd;
  const double shrink = p.shrink_max_pct / 100.0;
  const double grow = p.grow_min_pct / 100.0;
  // Caps are lowered and floors raised by the given share of their
  // magnitude, so the box tightens regardless of sign.
  switch (p.kind) {
    case PerturbationKind::P_tighten:
      for (auto& g : out.generators) {
        g.Pmax -= shrink * std::abs(g.Pmax);
        g.Pmin += grow * std::abs(g.Pmin);
        if (g.Pmin > g.Pmax)
          throw ResultingEmptyBox("P bounds at bus " + std::to_string(g.bus));
      }
      out.name += "-P" + std::to_string(static_cast<int>(p.shrink_max_pct));
      break;
    case PerturbationKind::Q_tighten:
      for (auto& g : out.generators) {
        g.Qmax -= shrink * std::abs(g.Qmax);
        g.Qmin += grow * std::abs(g.Qmin);
        if (g.Qmin > g.Qmax)
          throw ResultingEmptyBox("Q bounds at bus " + std::to_string(g.bus));
      }
      out.name += "-Q" + std::to_string(static_cast<int>(p.shrink_max_pct));
      break;
    case PerturbationKind::V_tighten:
      // Each bound moves inward by the given share of the interval width.
      for (auto& b : out.buses) {
        const double width = b.Vmax - b.Vmin;
        b.Vmax -= shrink * width;
        b.Vmin += grow * width;
        if (b.Vmin > b.Vmax)
          throw ResultingEmptyBox("V bounds at bus " + std::to_string(b.id));
      }
      out.name += "-V" + std::to_string(static_cast<int>(p.shrink_max_pct));
      break;
  }
  return out;
}

Perturbation named_perturbation(const std::string& name) {
  if (name == "P70") return {PerturbationKind::P_tighten, 70, 70};
  if (name == "P60") return {PerturbationKind::P_tighten, 0, 60};
  if (name == "Q80") return {PerturbationKind::Q_tighten, 80, 80};
  if (name == "V40") return {PerturbationKind::V_tighten, 40, 40};
  if (name.rfind("custom:", 0) == 0) {
    std::string spec = name.substr(7);
    std::stringstream ss(spec);
    std::string kind;
    std::getline(ss, kind, ',');
    Perturbation p;
    if (kind == "P")
      p.kind = PerturbationKind::P_tighten;
    else if (kind == "Q")
      p.kind = PerturbationKind::Q_tighten;
    else if (kind == "V")
      p.kind = PerturbationKind::V_tighten;
    else
      throw CaseError("unknown perturbation kind: " + kind);
    std::string tok;
    if (std::getline(ss, tok, ',')) p.shrink_max_pct = std::stod(tok);
    if (std::getline(ss, tok, ','))
      p.grow_min_pct = std::stod(tok);
    else
      p.grow_min_pct = p.shrink_max_pct;
    return p;
  }
  throw CaseError("unknown perturbation: " + name);
}

const char* norm_name(NormKind k) {
  switch (k) {
    case NormKind::l1: return "l1";
    case NormKind::l2: return "l2";
    case NormKind::linf: return "linf";
  }
  return "?";
}

NormKind norm_from_name(const std::string& s) {
  if (s == "l1") return NormKind::l1;
  if (s == "l2") return NormKind::l2;
  if (s == "linf" || s == "loo" || s == "inf") return NormKind::linf;
  throw std::runtime_error("unknown norm: " + s);
}

}  // namespace feasproj
