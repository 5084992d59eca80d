#pragma once

#include <string>

#include <json.hpp>

namespace comono::cli {

/// Every subcommand runs through one of these handlers. The handler receives
/// the (possibly unresolved) config, performs any data-dependent resolution
/// (rule-of-thumb and cross-validated bandwidths, stratum points, ...),
/// writes its artifacts into out_dir, and returns
/// {"config": resolved, "inputs": {...}, "outputs": {...}, "counts": {...}}.
/// Re-running a handler on an already-resolved config reproduces artifacts
/// byte-identically; the thread count is an execution detail and never
/// enters config or artifacts.
struct HandlerResult {
  nlohmann::json config, inputs, outputs, counts;
};

HandlerResult run_simulate(nlohmann::json cfg, const std::string& out_dir, int threads);
HandlerResult run_estimate_q(nlohmann::json cfg, const std::string& out_dir, int threads);
HandlerResult run_cate(nlohmann::json cfg, const std::string& out_dir, int threads);
HandlerResult run_policy(nlohmann::json cfg, const std::string& out_dir, int threads);
HandlerResult run_policy_sweep(nlohmann::json cfg, const std::string& out_dir, int threads);
HandlerResult run_diagnose(nlohmann::json cfg, const std::string& out_dir, int threads);

HandlerResult dispatch(const std::string& subcommand, nlohmann::json cfg,
                       const std::string& out_dir, int threads);

}  // namespace comono::cli
