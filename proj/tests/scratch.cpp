#include <algorithm>
#include <cstdio>

#include "wpcn/maxsum.hpp"
#include "wpcn/model.hpp"
#include "wpcn/throughput.hpp"

using namespace wpcn;

int main() {
  SolverOptions opts;
  for (double d : {0.0, 10.0, 20.0, 40.0, 80.0}) {
    for (int k : {5, 10, 20}) {
      double js = 0, jw = 0, jn = 0;
      const int seeds = 5;
      for (unsigned s = 1; s <= seeds; ++s) {
        PhysicalConfig cfg;
        cfg.s_th_db = -300;
        const NetworkInstance inst = build_network(cfg, k, 2, d, s);
        const Solution ms = solve_maxsum_sicd(inst, opts);
        // strongest-first totals
        Eigen::VectorXd tot = ms.rates.rowwise().sum();
        js += jain_index(tot);
        // weakest-first recovery of the same allocation
        auto orders = decoding_orders(inst);
        for (auto& o : orders) std::reverse(o.begin(), o.end());
        const Eigen::MatrixXd x2 = sinr_sicd(inst, ms.alloc, orders);
        Eigen::VectorXd tot2 = rate_matrix(ms.alloc.tau0, x2).rowwise().sum();
        jw += jain_index(tot2);
        // natural index order
        std::vector<std::vector<int>> nat(inst.num_slots);
        for (int n = 0; n < inst.num_slots; ++n)
          for (int i = 0; i < k; ++i) nat[n].push_back(i);
        const Eigen::MatrixXd x3 = sinr_sicd(inst, ms.alloc, nat);
        Eigen::VectorXd tot3 = rate_matrix(ms.alloc.tau0, x3).rowwise().sum();
        jn += jain_index(tot3);
      }
      std::printf("d=%3.0f K=%2d: jain strongest=%.3f weakest=%.3f natural=%.3f 1/K=%.3f\n",
                  d, k, js / seeds, jw / seeds, jn / seeds, 1.0 / k);
    }
  }
  return 0;
}
