#include "spalu/factor.hpp"

#include <json.hpp>

namespace spalu {

std::string stats_json(const FactorStats& s) {
  nlohmann::json j;
  j["qtilde"] = s.qtilde;
  j["factor_nnz"] = s.factor_nnz;
  j["time_interior"] = s.time_interior;
  auto& levels = j["levels"] = nlohmann::json::array();
  for (const auto& l : s.levels)
    levels.push_back({{"l", l.level},
                      {"num_segments", l.num_segments},
                      {"e_l", l.e_before},
                      {"e_l_prime", l.e_after},
                      {"time_sparsify", l.time_sparsify},
                      {"time_eliminate", l.time_eliminate}});
  return j.dump(2);
}

}  // namespace spalu
