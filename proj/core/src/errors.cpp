#include "tradediff/errors.hpp"

#include <sstream>

namespace tradediff {

namespace {
std::string no_convergence_message(std::size_t iterations, double residual, const std::string& worst,
                                   const std::string& context) {
    std::ostringstream out;
    if (!context.empty()) out << context << ": ";
    out << "no convergence after " << iterations << " iterations (residual " << residual << ", worst market "
        << worst << ")";
    return out.str();
}
}  // namespace

NoConvergence::NoConvergence(std::size_t iterations, double residual, std::string worst, std::string context)
    : Error(no_convergence_message(iterations, residual, worst, context)),
      iterations_(iterations),
      residual_(residual),
      worst_(std::move(worst)) {}

InfeasibleTarget::InfeasibleTarget(std::string message, std::vector<std::string> cells)
    : Error(std::move(message)), cells_(std::move(cells)) {}

}  // namespace tradediff
