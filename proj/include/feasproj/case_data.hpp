#pragma once

#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

#include "feasproj/types.hpp"

namespace feasproj {

enum class BusType { PQ, PV, Slack };

struct Bus {
  int id = 0;
  BusType type = BusType::PQ;
  double Pd = 0, Qd = 0;    // load, p.u.
  double Gs = 0, Bs = 0;    // shunt, p.u.
  double Vmax = 1.1, Vmin = 0.9;
};

struct Generator {
  int bus = 0;
  double Pmax = 0, Pmin = 0, Qmax = 0, Qmin = 0;  // p.u.
  bool status = true;
  double Pset = 0;   // dispatch setpoint from the case file, p.u.
  double Vset = 1;   // voltage magnitude setpoint, p.u.
};

struct Branch {
  int from = 0, to = 0;
  double r = 0, x = 0;      // series impedance, p.u.
  double b_charge = 0;      // total line charging
  double tap = 1;           // ratio, 1 if absent
  double shift = 0;         // radians
  double rateA = 0;         // apparent power limit, p.u.; 0 = unlimited
  bool status = true;
};

struct GenCost {
  int gen_index = 0;
  double c2 = 0, c1 = 0, c0 = 0;  // cost/p.u.^2, cost/p.u., cost
};

struct CaseData {
  std::string name;
  double baseMVA = 100;
  std::vector<Bus> buses;
  std::vector<Generator> generators;
  std::vector<Branch> branches;
  std::vector<GenCost> costs;

  Index bus_index(int id) const;  // position in buses, throws on unknown id
  Index slack_index() const;
};

class CaseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingTable : public CaseError {
 public:
  explicit MissingTable(const std::string& table);
  const std::string table;
};

class MalformedRow : public CaseError {
 public:
  MalformedRow(const std::string& table, int line, const std::string& what);
  const std::string table;
  const int line;
};

class UnknownBusReference : public CaseError {
 public:
  explicit UnknownBusReference(int id);
  const int id;
};

class MultipleSlackBuses : public CaseError {
 public:
  MultipleSlackBuses();
};

class NoSlackBus : public CaseError {
 public:
  NoSlackBus();
};

class ResultingEmptyBox : public CaseError {
 public:
  explicit ResultingEmptyBox(const std::string& what);
};

CaseData parse_case(std::istream& in, const std::string& name = "");
CaseData parse_case_file(const std::string& path);

enum class PerturbationKind { P_tighten, Q_tighten, V_tighten };

struct Perturbation {
  PerturbationKind kind = PerturbationKind::P_tighten;
  double shrink_max_pct = 0;  // percent removed from the upper bound
  double grow_min_pct = 0;    // percent added to the lower bound
};

CaseData apply_perturbation(const CaseData& cd, const Perturbation& p);

// Named recipes: P70, P60, Q80, V40, or custom:P,<shrink>,<grow> /
// custom:Q,<shrink>,<grow> / custom:V,<pct>.
Perturbation named_perturbation(const std::string& name);

}  // namespace feasproj
