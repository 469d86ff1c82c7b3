#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace bte::cli {

struct Flags {
  std::string config;
  std::optional<std::string> out;
  std::optional<int> threads;
  std::optional<double> tol;
  std::optional<int> max_iter;
  std::optional<std::uint64_t> seed;
  std::optional<long long> particles;
  std::optional<int> p;
  std::string phase = "convex";
};

// Each returns the process exit code: 0 success, 1 domain failure, 2 usage or parse error.
int cmd_validate_xs(const Flags& f);
int cmd_solve(const Flags& f);
int cmd_evolve(const Flags& f);
int cmd_dose(const Flags& f);
int cmd_plan_init(const Flags& f);
int cmd_optimize(const Flags& f);
int cmd_probe_regularity(const Flags& f);
int cmd_oracle_mc(const Flags& f);

}  // namespace bte::cli
