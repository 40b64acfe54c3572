#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "feasproj/certify.hpp"
#include "feasproj/types.hpp"

namespace feasproj {

enum class Stage { S1 = 1, S2 = 2, S3 = 3 };
enum class Backend { nlp, sdp };

const char* backend_name(Backend b);
Backend backend_from_name(const std::string& s);

class IoFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PointUnavailable : public std::runtime_error {
 public:
  PointUnavailable() : std::runtime_error("stage report carries no point") {}
};

struct StageReport {
  Stage stage = Stage::S1;
  Backend backend = Backend::nlp;
  NormKind norm = NormKind::l1;
  double slack_norm = 0;  // UB1 for S1
  std::optional<double> lb;
  std::optional<double> budget;  // S2 only
  double objective = 0;
  std::string status;
  Vector point;  // stage point in its own layout; may be empty
  std::string point_file;
  std::vector<std::string> slack_names;  // aligned with slack_values
  Vector slack_values;
  long wall_ms = 0;
};

// Slack entries above tol, sorted descending by value.
std::vector<std::string> nonzero_slack_names(const StageReport& report, double tol);

void write_report(const std::string& instance, NormKind norm,
                  const std::vector<StageReport>& reports,
                  const AlphaCertificate* certificate, std::ostream& sink);

}  // namespace feasproj
