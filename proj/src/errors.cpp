#include "comono/errors.hpp"

namespace comono {

const char* errc_name(errc code) {
  switch (code) {
    case errc::missing_column: return "MissingColumn";
    case errc::non_numeric_cell: return "NonNumericCell";
    case errc::non_binary_treatment: return "NonBinaryTreatment";
    case errc::empty_group: return "EmptyGroup";
    case errc::degenerate_covariate: return "DegenerateCovariate";
    case errc::insufficient_support: return "InsufficientSupport";
    case errc::no_frontier_units: return "NoFrontierUnits";
    case errc::empty_frontier_sample: return "EmptyFrontierSample";
    case errc::all_candidates_failed: return "AllCandidatesFailed";
    case errc::no_identified_units: return "NoIdentifiedUnits";
    case errc::too_few_points: return "TooFewPoints";
    case errc::invalid_covariance: return "InvalidCovariance";
    case errc::bootstrap_aborted: return "BootstrapAborted";
    case errc::invalid_argument: return "InvalidArgument";
    case errc::io_error: return "IoError";
  }
  return "UnknownError";
}

int errc_exit_code(errc code) {
  switch (code) {
    case errc::missing_column:
    case errc::non_numeric_cell:
    case errc::non_binary_treatment:
    case errc::empty_group:
    case errc::degenerate_covariate:
    case errc::invalid_argument:
    case errc::io_error:
      return 3;
    default:
      return 4;
  }
}

}  // namespace comono
