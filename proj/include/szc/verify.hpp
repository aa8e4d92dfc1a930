#pragma once

// Reference implementations that share no code path with the library
// (naive loops only, no SIMD kernels, no overlap-add), and the acceptance
// checks built on them. Used by the acceptance test binary and `szc verify`.

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "szc/filterdesign.hpp"
#include "szc/irdata.hpp"
#include "szc/roomsim.hpp"

namespace szc::verify {

/// Full linear convolution by the textbook double loop.
std::vector<double> direct_convolution(std::span<const double> x, std::span<const double> h);

/// Stacked [H_1; ...; H_M] of one zone, materialized densely
/// (M (K+J-1) rows, L J columns).
Eigen::MatrixXd dense_zone_matrix(const IrSet& set, PositionId position, MicGroup zone, std::size_t J);

/// R = H^T H by explicit triple loop over the dense matrix.
Eigen::MatrixXd naive_covariance(const Eigen::MatrixXd& H);

/// Stacked desired pressure for the bright zone built by index arithmetic.
Eigen::VectorXd dense_desired(const IrSet& set, PositionId position, std::size_t l_ref, std::size_t delay,
                              std::size_t J);

/// Weighted PM objective (1-zeta)|H_B q - d|^2 + zeta |H_D q|^2 + lambda |q|^2
/// evaluated by direct convolution.
double pm_objective(const IrSet& set, PositionId position, std::span<const double> q, std::size_t J,
                    std::size_t l_ref, std::size_t delay, double zeta, double lambda);

/// DFT bin k of x zero-padded to nfft, by direct summation.
std::complex<double> naive_dft_bin(std::span<const double> x, std::size_t nfft, std::size_t k);

/// Distinct image-source positions reachable by at most `order` mirror
/// reflections, found by repeated reflection of the source.
std::vector<Point3> reflect_images(const RoomSpec& room, const Point3& source, int order);

/// Number of integer triples with |a|+|b|+|c| <= order.
std::size_t lattice_count(int order);

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
};

struct AcceptanceOptions {
    /// Path of the `szc` executable for the CLI determinism check; empty
    /// runs the in-process equivalent only.
    std::string cli_path;
    std::string scratch_dir = "acceptance_scratch";
};

/// Runs every acceptance criterion on the D1 scene and returns one result
/// per criterion, in order.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options,
                                            const std::function<void(const CriterionResult&)>& on_result = {});

}  // namespace szc::verify
