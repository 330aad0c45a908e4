// Scratch smoke driver (replaced by the real acceptance suite later).
#include <cstdio>

#include "wpcn/maxmin.hpp"
#include "wpcn/maxsum.hpp"
#include "wpcn/model.hpp"
#include "wpcn/oracle.hpp"

using namespace wpcn;

int main() {
  PhysicalConfig cfg;
  SolverOptions opts;

  const NetworkInstance inst = build_network(cfg, 2, 1, 40.0, 7);
  std::printf("noise=%.4e g=[%.3e %.3e] gamma=[%.3e %.3e] s_th=%.3f\n",
              inst.noise_power, inst.g(0, 0), inst.g(1, 0), inst.gamma(0, 0),
              inst.gamma(1, 0), inst.s_th(0));

  const Solution sicd = solve_maxsum_sicd(inst, opts);
  std::printf("maxsum-sicd: status=%s obj=%.6f tau0=%.4f\n",
              to_string(sicd.status).c_str(), sicd.objective.value_or(-1),
              sicd.alloc.tau0(0));

  GridSpec gs;
  gs.objective = Objective::MaxSum;
  gs.scheme = Decoder::Sicd;
  const Solution g = grid_search(inst, gs);
  std::printf("grid maxsum-sicd: obj=%.6f tau0=%.4f\n", g.objective.value_or(-1),
              g.alloc.tau0(0));

  const Solution lcd = solve_maxsum_lcd(inst, opts);
  std::printf("maxsum-lcd: status=%s obj=%.6f\n", to_string(lcd.status).c_str(),
              lcd.objective.value_or(-1));

  GridSpec gl;
  gl.objective = Objective::MaxSum;
  gl.scheme = Decoder::Lcd;
  const Solution g2 = grid_search(inst, gl);
  std::printf("grid maxsum-lcd: obj=%.6f\n", g2.objective.value_or(-1));

  const Solution mm = solve_maxmin(inst, Decoder::Sicd, opts);
  std::printf("maxmin-sicd: status=%s obj=%.6f\n", to_string(mm.status).c_str(),
              mm.objective.value_or(-1));

  GridSpec gm;
  gm.objective = Objective::MaxMin;
  gm.scheme = Decoder::Sicd;
  const Solution g3 = grid_search(inst, gm);
  std::printf("grid maxmin-sicd: obj=%.6f\n", g3.objective.value_or(-1));

  const Solution mml = solve_maxmin(inst, Decoder::Lcd, opts);
  std::printf("maxmin-lcd: status=%s obj=%.6f\n", to_string(mml.status).c_str(),
              mml.objective.value_or(-1));

  GridSpec gml;
  gml.objective = Objective::MaxMin;
  gml.scheme = Decoder::Lcd;
  const Solution g4 = grid_search(inst, gml);
  std::printf("grid maxmin-lcd: obj=%.6f\n", g4.objective.value_or(-1));

  const DualSolveResult dual = solve_maxsum_sicd_dual(inst, opts);
  std::printf("dual: status=%s obj=%.6f bound=%.6f gap=%.2e iters=%d\n",
              to_string(dual.solution.status).c_str(),
              dual.solution.objective.value_or(-1), dual.dual_bound, dual.gap,
              dual.iterations);
  return 0;
}
