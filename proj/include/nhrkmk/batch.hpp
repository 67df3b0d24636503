#pragma once

#include <cstddef>
#include <exception>
#include <string_view>
#include <vector>

namespace nhrkmk {

enum class Execution
{
  Serial,
  Parallel,
};

std::string_view to_string(Execution execution);
Execution parse_execution(std::string_view name);

/// Number of OpenMP threads a parallel batch would use (1 without OpenMP).
int batch_threads();

/**
 * Evaluates case(i) for i in [0, count).
 *
 * Serial is the reference loop. Parallel distributes the cases over OpenMP
 * threads; results are stored by index so both orders give identical output.
 * The first exception in index order is rethrown after all cases finish.
 */
template <typename Result, typename Case>
std::vector<Result> run_cases(std::size_t count, const Case& one_case, Execution execution)
{
  std::vector<Result> results(count);
  std::vector<std::exception_ptr> errors(count);
  const auto body = [&](std::size_t i) {
    try {
      results[i] = one_case(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  if (execution == Execution::Serial) {
    for (std::size_t i = 0; i < count; ++i) body(i);
  } else {
    const long n = static_cast<long>(count);
#pragma omp parallel for schedule(dynamic, 1)
    for (long i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
  }

  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

}  // namespace nhrkmk
