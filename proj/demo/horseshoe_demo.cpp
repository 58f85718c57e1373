// Fits one simulated Case-1 dataset with every engine and prints the model
// error of each against the cross-validated lasso.

#include <cstdio>

#include "tpbn/tpbn.hpp"

int main() {
  using namespace tpbn;
  const RegressionDataset data = gen_case(CaseSpec::case1(), 0);
  std::printf("n=%td p=%td sigma=%.3f snr=%.3f\n", data.n(), data.p(), *data.noise_sd, snr(data));

  const LassoFit lasso = cv_lasso(data, 10, {}, 1);
  const double lasso_me = model_error(lasso.beta, data);
  std::printf("%-26s ME=%8.4f\n", "lasso (10-fold CV)", lasso_me);

  const PriorConfig horseshoe{TpbParams::half_cauchy(0.5, 0.5)};
  const VbResult vb = run_vb(data, horseshoe);
  const double vb_me = model_error(vb.report.beta, data);
  std::printf("%-26s ME=%8.4f RME=%.3f iterations=%zu\n", "vb horseshoe", vb_me, vb_me / lasso_me,
              vb.report.iterations);

  const GibbsResult gibbs = run_gibbs(data, horseshoe, GibbsSchedule{12000, 2000, 5, false}, 7);
  const double gibbs_me = model_error(gibbs.report.beta, data);
  std::printf("%-26s ME=%8.4f RME=%.3f draws=%zu\n", "gibbs horseshoe", gibbs_me, gibbs_me / lasso_me,
              gibbs.report.draws);

  const double phi = calibrate_phi(1.0, 0.5, 0.5, 0.99);
  const EmResult em = run_em(data, PriorConfig{TpbParams::fixed(1.0, 0.5, phi)});
  const double em_me = model_error(em.report.beta, data);
  std::printf("%-26s ME=%8.4f RME=%.3f exact zeros=%zu\n", "map (1, 1/2, calibrated)", em_me, em_me / lasso_me,
              static_cast<std::size_t>(data.p()) - em.state.active_count());
  return 0;
}
