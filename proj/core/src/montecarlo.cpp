#include "gossa/montecarlo.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace gossa {

void parallel_replicas(int n_runs, int threads, const std::function<void(int)>& fn) {
  if (n_runs <= 0) return;
  threads = std::max(1, std::min(threads, n_runs));
  if (threads == 1) {
    for (int r = 0; r < n_runs; ++r) fn(r);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      int r = next.fetch_add(1);
      if (r >= n_runs) return;
      try {
        fn(r);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

StackedState make_initial_state(const InitSpec& spec, int n_agents, int dim,
                                std::uint64_t root_seed, int replica) {
  Eigen::VectorXd theta(static_cast<Eigen::Index>(n_agents) * dim);
  switch (spec.kind) {
    case InitSpec::Kind::Explicit: {
      if (spec.point.size() == theta.size()) {
        theta = spec.point;
      } else if (spec.point.size() == dim) {
        for (int i = 0; i < n_agents; ++i) theta.segment(i * dim, dim) = spec.point;
      } else {
        throw std::invalid_argument("InitSpec: explicit vector has wrong length");
      }
      break;
    }
    case InitSpec::Kind::Box: {
      auto rng = make_stream(root_seed, static_cast<std::uint64_t>(replica),
                             StreamChannel::Init);
      std::uniform_real_distribution<double> u(spec.box_lo, spec.box_hi);
      for (Eigen::Index k = 0; k < theta.size(); ++k) theta[k] = u(rng);
      break;
    }
    case InitSpec::Kind::NearPoint: {
      if (spec.point.size() != dim) {
        throw std::invalid_argument("InitSpec: near-point center must have length d");
      }
      auto rng = make_stream(root_seed, static_cast<std::uint64_t>(replica),
                             StreamChannel::Init);
      std::uniform_real_distribution<double> u(-spec.scale, spec.scale);
      for (int i = 0; i < n_agents; ++i) {
        for (int k = 0; k < dim; ++k) theta[i * dim + k] = spec.point[k] + u(rng);
      }
      break;
    }
  }
  return StackedState(std::move(theta), n_agents, dim);
}

}  // namespace gossa
