#ifndef PMCMC_VERSION_HPP
#define PMCMC_VERSION_HPP

namespace pmcmc {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace pmcmc

#endif
