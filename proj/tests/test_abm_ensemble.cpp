#include <doctest.h>

#include "ctrap/abm.hpp"

using namespace ctrap;

TEST_CASE("stickier links never lower the long-run functional fraction") {
  AbmConfig c;
  c.n_agents = 200;
  c.params = ModelParams(0.15, 0.4, 1e-4);
  c.f0 = Probability(0.18);
  c.xi = 1.0;
  c.t_end = 1000.0;
  c.sample_dt = 1000.0;
  c.seed = 7;

  std::vector<double> mean, sem;
  for (double r : {1.0, 10.0, 2000.0}) {
    c.r = r;
    const auto s = run_replicas(c, 100);
    mean.push_back(s.mean_f.back());
    sem.push_back(s.sem_f.back());
    MESSAGE("r=" << r << " mean final F=" << mean.back() << " sem=" << sem.back());
  }
  CHECK(mean[1] >= mean[0]);
  CHECK(mean[2] >= mean[1]);
  CHECK(mean[2] - mean[0] > 2.0 * (sem[0] + sem[2]));
}
