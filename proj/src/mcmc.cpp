#include <cmath>
#include <exception>

#include "pival/errors.hpp"
#include "pival/posterior.hpp"

namespace pival {

McmcChain rw_metropolis(const LogDensityFn& log_post, const Eigen::VectorXd& init, const Eigen::MatrixXd& proposal_cov,
                        int n_iter, int burn_in, RngStream stream, const MetropolisOptions& opts) {
    const Eigen::Index p = init.size();
    if (p < 1 || proposal_cov.rows() != p || proposal_cov.cols() != p)
        throw DimensionError("rw_metropolis: proposal covariance must be p x p");
    if (n_iter < 1 || burn_in < 0) throw DomainError("rw_metropolis: n_iter >= 1 and burn_in >= 0 required");
    Eigen::LLT<Eigen::MatrixXd> llt(proposal_cov);
    if (llt.info() != Eigen::Success) throw DomainError("rw_metropolis: proposal covariance not positive definite");
    const Eigen::MatrixXd L = llt.matrixL();

    Eigen::VectorXd x = init;
    double lp = log_post(x);
    if (!std::isfinite(lp)) throw DomainError("rw_metropolis: log posterior not finite at init");

    McmcChain chain;
    chain.seed = stream.seed();
    chain.stream_id = stream.stream_id();
    chain.burn_in = burn_in;
    chain.draws.resize(n_iter, p);

    double log_scale = std::log(2.38 / std::sqrt(static_cast<double>(p)));
    Eigen::VectorXd z(p);
    auto step = [&](double scale) {
        for (Eigen::Index j = 0; j < p; ++j) z[j] = stream.normal();
        const Eigen::VectorXd prop = x + scale * (L * z);
        const double lp_prop = log_post(prop);
        // Draw the uniform unconditionally so the stream position never depends on the branch.
        const double u = stream.uniform();
        if (std::isfinite(lp_prop) && std::log(u) < lp_prop - lp) {
            x = prop;
            lp = lp_prop;
            return true;
        }
        return false;
    };

    int batch_accepts = 0, batch_len = 0;
    for (int it = 0; it < burn_in; ++it) {
        batch_accepts += step(std::exp(log_scale));
        if (++batch_len == opts.adapt_batch) {
            const double rate = static_cast<double>(batch_accepts) / batch_len;
            log_scale += rate - opts.target_acceptance;
            batch_accepts = batch_len = 0;
        }
    }
    chain.proposal_scale = std::exp(log_scale);

    int accepts = 0;
    for (int it = 0; it < n_iter; ++it) {
        accepts += step(chain.proposal_scale);
        chain.draws.row(it) = x.transpose();
    }
    chain.acceptance_rate = static_cast<double>(accepts) / n_iter;
    if (accepts == 0) throw MixingError("rw_metropolis: no proposal accepted after adaptation");
    return chain;
}

namespace {

template <bool Parallel>
std::vector<McmcChain> chains_impl(const LogDensityFn& log_post, const Eigen::VectorXd& init,
                                   const Eigen::MatrixXd& proposal_cov, int n_chains, int n_iter, int burn_in,
                                   std::uint64_t seed, std::uint64_t first_stream, const MetropolisOptions& opts) {
    if (n_chains < 1) throw DomainError("run_chains: need at least one chain");
    std::vector<McmcChain> chains(static_cast<std::size_t>(n_chains));
    if constexpr (Parallel) {
        std::vector<std::exception_ptr> errors(chains.size());
#pragma omp parallel for schedule(dynamic)
        for (int c = 0; c < n_chains; ++c) {
            try {
                chains[c] = rw_metropolis(log_post, init, proposal_cov, n_iter, burn_in,
                                          RngStream(seed, first_stream + static_cast<std::uint64_t>(c)), opts);
            } catch (...) {
                errors[c] = std::current_exception();
            }
        }
        for (const auto& e : errors)
            if (e) std::rethrow_exception(e);
    } else {
        for (int c = 0; c < n_chains; ++c)
            chains[c] = rw_metropolis(log_post, init, proposal_cov, n_iter, burn_in,
                                      RngStream(seed, first_stream + static_cast<std::uint64_t>(c)), opts);
    }
    return chains;
}

}  // namespace

std::vector<McmcChain> run_chains(const LogDensityFn& log_post, const Eigen::VectorXd& init,
                                  const Eigen::MatrixXd& proposal_cov, int n_chains, int n_iter, int burn_in,
                                  std::uint64_t seed, std::uint64_t first_stream, const MetropolisOptions& opts) {
    return chains_impl<true>(log_post, init, proposal_cov, n_chains, n_iter, burn_in, seed, first_stream, opts);
}

namespace serial {
std::vector<McmcChain> run_chains(const LogDensityFn& log_post, const Eigen::VectorXd& init,
                                  const Eigen::MatrixXd& proposal_cov, int n_chains, int n_iter, int burn_in,
                                  std::uint64_t seed, std::uint64_t first_stream, const MetropolisOptions& opts) {
    return chains_impl<false>(log_post, init, proposal_cov, n_chains, n_iter, burn_in, seed, first_stream, opts);
}
}  // namespace serial

Eigen::MatrixXd pool_draws(const std::vector<McmcChain>& chains) {
    Eigen::Index rows = 0;
    for (const auto& c : chains) rows += c.draws.rows();
    if (chains.empty()) return {};
    Eigen::MatrixXd out(rows, chains.front().draws.cols());
    Eigen::Index at = 0;
    for (const auto& c : chains) {
        out.middleRows(at, c.draws.rows()) = c.draws;
        at += c.draws.rows();
    }
    return out;
}

}  // namespace pival
