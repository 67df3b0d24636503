#include "nhrkmk/batch.hpp"

#include <string>

#include "nhrkmk/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nhrkmk {

std::string_view to_string(Execution execution)
{
  return execution == Execution::Serial ? "serial" : "parallel";
}

Execution parse_execution(std::string_view name)
{
  if (name == "serial") return Execution::Serial;
  if (name == "parallel") return Execution::Parallel;
  throw InvalidConfig("unknown execution '" + std::string(name) + "' (expected serial|parallel)");
}

int batch_threads()
{
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace nhrkmk
