#pragma once

// Per-position control filter design: convolution matrices, zone
// covariances, acoustic contrast control (ACC), pressure matching (PM), the
// position-averaged "mix" design, and the filter dictionary built from them.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "szc/irdata.hpp"

namespace szc {

enum class DesignMethod { acc, pm };
std::string to_string(DesignMethod method);
DesignMethod parse_design_method(const std::string& text);

struct DesignParams {
    std::size_t filter_length = 32;  // J
    double lambda = 1e-5;
    double zeta = 0.5;
    std::size_t l_ref = 0;
    /// Modeling delay of the desired pressure in samples; unset means J/2.
    std::optional<std::size_t> delay;

    std::size_t effective_delay() const { return delay.value_or(filter_length / 2); }
    void validate(std::size_t num_loudspeakers) const;
};

/// Toeplitz operator of one IR: maps a length-J filter to the length K+J-1
/// pressure h * q. Column c is the IR shifted down by c samples.
class ConvolutionMatrix {
public:
    ConvolutionMatrix(std::span<const double> ir, std::size_t filter_length);

    std::size_t rows() const { return ir_.size() + filter_length_ - 1; }
    std::size_t cols() const { return filter_length_; }
    double at(std::size_t row, std::size_t col) const;
    std::vector<double> apply(std::span<const double> q) const;
    std::span<const double> ir() const { return ir_; }

private:
    std::vector<double> ir_;
    std::size_t filter_length_;
};

struct ZoneCovariance {
    Eigen::MatrixXd R;  // LJ x LJ, symmetric PSD
    MicGroup zone = MicGroup::bright;
    std::optional<PositionId> position;  // empty for averaged covariances
};

/// R = sum_m H_m^T H_m, H_m = [H_{m,1} ... H_{m,L}].
ZoneCovariance zone_covariance(const IrSet& set, PositionId position, MicGroup zone,
                               std::size_t filter_length);

/// Elementwise mean over positions.
ZoneCovariance mean_covariance(std::span<const ZoneCovariance> covariances);

struct DesiredPressure {
    std::vector<std::vector<double>> per_mic;  // each of length K+J-1
    std::size_t l_ref = 0;
    std::size_t delay = 0;

    double energy() const;
};

/// d_m = h_{m,l_ref} delayed by `delay` samples, length K+J-1.
DesiredPressure desired_pressure(const IrSet& set, PositionId position, std::size_t l_ref,
                                 std::size_t delay, std::size_t filter_length);

/// r = sum over bright mics of H_m^T d_m.
Eigen::VectorXd cross_vector(const IrSet& set, PositionId position, const DesiredPressure& d,
                             std::size_t filter_length);

struct ControlFilterSet {
    std::vector<double> coefficients;  // stacked [q_1; ...; q_L]
    std::size_t num_loudspeakers = 0;
    std::size_t filter_length = 0;
    DesignMethod method = DesignMethod::pm;
    std::optional<PositionId> position;  // empty for the mix filter
    DesignParams params;
    /// ACC only: principal generalized eigenvalue of (R_B, R_D + lambda I)
    /// and its zone-size corrected value mu * M_B / M_D.
    double eigenvalue = 0.0;
    double eigenvalue_zone_corrected = 0.0;

    std::span<const double> filter(std::size_t speaker) const {
        return std::span<const double>(coefficients).subspan(speaker * filter_length, filter_length);
    }
    Eigen::Map<const Eigen::VectorXd> stacked() const {
        return {coefficients.data(), static_cast<Eigen::Index>(coefficients.size())};
    }
    friend bool operator==(const ControlFilterSet& a, const ControlFilterSet& b) {
        return a.coefficients == b.coefficients && a.num_loudspeakers == b.num_loudspeakers &&
               a.filter_length == b.filter_length;
    }
};

/// Solves ((1-zeta) R_B + zeta R_D + lambda I) q = (1-zeta) r by Cholesky.
ControlFilterSet design_pm(const ZoneCovariance& bright, const ZoneCovariance& dark,
                           const Eigen::VectorXd& cross, double zeta, double lambda,
                           std::size_t num_loudspeakers);

/// Principal generalized eigenvector of (R_B, R_D + lambda I), scaled so
/// q^T R_B q == power_target and with its largest-magnitude entry positive.
ControlFilterSet design_acc(const ZoneCovariance& bright, const ZoneCovariance& dark,
                            double lambda, double power_target, std::size_t num_loudspeakers);

struct MixInputs {
    std::span<const ZoneCovariance> bright;
    std::span<const ZoneCovariance> dark;
    std::span<const Eigen::VectorXd> cross;  // PM only
    std::span<const double> power_targets;   // ACC only
};

/// Designs one filter on position-averaged covariances (and cross vectors
/// or power targets).
ControlFilterSet design_mix(const MixInputs& inputs, DesignMethod method, const DesignParams& params,
                            std::size_t num_loudspeakers, const MicCounts& mics);

/// Everything a per-position design needs, precomputed once.
struct PositionDesignData {
    ZoneCovariance bright;
    ZoneCovariance dark;
    DesiredPressure desired;
    Eigen::VectorXd cross;
};
PositionDesignData prepare_position(const IrSet& set, PositionId position, const DesignParams& params);

/// The standalone per-position design.
ControlFilterSet design_for_position(const IrSet& set, PositionId position, DesignMethod method,
                                     const DesignParams& params);

struct FilterDictionary {
    DesignMethod method = DesignMethod::pm;
    DesignParams params;
    std::size_t num_loudspeakers = 0;
    std::vector<ControlFilterSet> entries;  // one per position, dense ids
    std::vector<std::size_t> source_ids;    // original grid ids of the entries

    std::size_t size() const { return entries.size(); }
    const ControlFilterSet& at(PositionId position) const;
};

/// Read-only view of the observation-mic IRs of a position set.
class ObservationIrView {
public:
    explicit ObservationIrView(const IrSet& set) : set_(&set) {}
    std::size_t num_positions() const { return set_->num_positions(); }
    std::size_t num_mics() const { return set_->mic_count(MicGroup::observation); }
    std::size_t num_loudspeakers() const { return set_->num_loudspeakers(); }
    std::size_t ir_length() const { return set_->ir_length(); }
    std::span<const double> ir(PositionId position, std::size_t mic, std::size_t speaker) const {
        return set_->ir(position, MicGroup::observation, mic, speaker);
    }
    const IrSet& irset() const { return *set_; }

private:
    const IrSet* set_;
};

struct Dictionaries {
    FilterDictionary filters;
    ObservationIrView observation;
    ControlFilterSet mix;
};

/// Designs one filter per position plus the mix filter over all positions.
/// The returned view references `set`, which must outlive it.
Dictionaries build_dictionaries(const IrSet& set, DesignMethod method, const DesignParams& params);

void save_dictionary(const FilterDictionary& dict, const std::filesystem::path& dir);
FilterDictionary load_dictionary(const std::filesystem::path& dir, DesignMethod method);

}  // namespace szc
