#include "szc/filterdesign.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "szc/errors.hpp"
#include "szc/simd/kernels.hpp"

namespace szc {

std::string to_string(DesignMethod method) { return method == DesignMethod::acc ? "acc" : "pm"; }

DesignMethod parse_design_method(const std::string& text) {
    if (text == "acc" || text == "ACC") return DesignMethod::acc;
    if (text == "pm" || text == "PM") return DesignMethod::pm;
    throw ValidationError("unknown design method '" + text + "' (expected acc or pm)");
}

void DesignParams::validate(std::size_t num_loudspeakers) const {
    if (filter_length == 0) throw ValidationError("filter length J must be at least 1");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be positive");
    if (!(zeta >= 0.0 && zeta <= 1.0)) throw ValidationError("zeta must lie in [0, 1]");
    if (l_ref >= num_loudspeakers) throw ValidationError("reference loudspeaker index out of range");
    if (effective_delay() > filter_length - 1) {
        throw ValidationError("modeling delay must lie in [0, J-1]");
    }
}

ConvolutionMatrix::ConvolutionMatrix(std::span<const double> ir, std::size_t filter_length)
    : ir_(ir.begin(), ir.end()), filter_length_(filter_length) {
    if (ir_.empty()) throw ValidationError("convolution matrix needs a non-empty IR");
    if (filter_length_ == 0) throw ValidationError("convolution matrix needs J >= 1");
}

double ConvolutionMatrix::at(std::size_t row, std::size_t col) const {
    if (row < col || row - col >= ir_.size()) return 0.0;
    return ir_[row - col];
}

std::vector<double> ConvolutionMatrix::apply(std::span<const double> q) const {
    if (q.size() != filter_length_) throw ValidationError("filter length does not match matrix");
    std::vector<double> out(rows(), 0.0);
    simd::convolve_add(q, ir_, out);
    return out;
}

ZoneCovariance zone_covariance(const IrSet& set, PositionId position, MicGroup zone,
                               std::size_t filter_length) {
    if (zone == MicGroup::observation) {
        throw ValidationError("zone covariance is defined for bright and dark zones only");
    }
    if (filter_length == 0) throw ValidationError("filter length J must be at least 1");
    const std::size_t L = set.num_loudspeakers();
    const std::size_t J = filter_length;
    const std::size_t K = set.ir_length();
    const std::size_t M = set.mic_count(zone);
    const auto& kern = simd::active();

    // Column (l, j) of H_m is h_{m,l} shifted by j, so the inner product of
    // columns (l1, j1) and (l2, j2) depends on the lag j2 - j1 only.
    // xcorr[lag] holds sum_m <h_{m,l1}[. + lag], h_{m,l2}> for lag in (-K, K).
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(L * J),
                                              static_cast<Eigen::Index>(L * J));
    const std::size_t max_lag = std::min(K, J);  // lags >= J never index the matrix
    std::vector<double> pos_lag(max_lag), neg_lag(max_lag);
    for (std::size_t l1 = 0; l1 < L; ++l1) {
        for (std::size_t l2 = l1; l2 < L; ++l2) {
            std::fill(pos_lag.begin(), pos_lag.end(), 0.0);
            std::fill(neg_lag.begin(), neg_lag.end(), 0.0);
            for (std::size_t m = 0; m < M; ++m) {
                const auto h1 = set.ir(position, zone, m, l1);
                const auto h2 = set.ir(position, zone, m, l2);
                for (std::size_t lag = 0; lag < max_lag; ++lag) {
                    // j2 = j1 + lag: sum_k h1[k + lag] h2[k]
                    pos_lag[lag] += kern.dot(h1.data() + lag, h2.data(), K - lag);
                    // j1 = j2 + lag: sum_k h1[k] h2[k + lag]
                    neg_lag[lag] += kern.dot(h1.data(), h2.data() + lag, K - lag);
                }
            }
            for (std::size_t j1 = 0; j1 < J; ++j1) {
                for (std::size_t j2 = 0; j2 < J; ++j2) {
                    const std::size_t lag = j1 <= j2 ? j2 - j1 : j1 - j2;
                    const double v = lag >= max_lag ? 0.0 : (j1 <= j2 ? pos_lag[lag] : neg_lag[lag]);
                    const auto r = static_cast<Eigen::Index>(l1 * J + j1);
                    const auto c = static_cast<Eigen::Index>(l2 * J + j2);
                    R(r, c) = v;
                    R(c, r) = v;
                }
            }
        }
    }
    return {std::move(R), zone, position};
}

ZoneCovariance mean_covariance(std::span<const ZoneCovariance> covariances) {
    if (covariances.empty()) throw ValidationError("cannot average an empty covariance list");
    ZoneCovariance out{covariances.front().R, covariances.front().zone, std::nullopt};
    for (std::size_t i = 1; i < covariances.size(); ++i) {
        if (covariances[i].R.rows() != out.R.rows() || covariances[i].zone != out.zone) {
            throw ValidationError("covariances to average have inconsistent shape or zone");
        }
        out.R += covariances[i].R;
    }
    out.R /= static_cast<double>(covariances.size());
    return out;
}

double DesiredPressure::energy() const {
    double e = 0.0;
    for (const auto& d : per_mic) e += simd::dot(d, d);
    return e;
}

DesiredPressure desired_pressure(const IrSet& set, PositionId position, std::size_t l_ref,
                                 std::size_t delay, std::size_t filter_length) {
    if (filter_length == 0) throw ValidationError("filter length J must be at least 1");
    if (l_ref >= set.num_loudspeakers()) throw ValidationError("reference loudspeaker out of range");
    if (delay > filter_length - 1) throw ValidationError("modeling delay must lie in [0, J-1]");
    const std::size_t K = set.ir_length();
    DesiredPressure d{{}, l_ref, delay};
    for (std::size_t m = 0; m < set.mic_count(MicGroup::bright); ++m) {
        const auto h = set.ir(position, MicGroup::bright, m, l_ref);
        std::vector<double> v(K + filter_length - 1, 0.0);
        std::copy(h.begin(), h.end(), v.begin() + static_cast<std::ptrdiff_t>(delay));
        d.per_mic.push_back(std::move(v));
    }
    return d;
}

Eigen::VectorXd cross_vector(const IrSet& set, PositionId position, const DesiredPressure& d,
                             std::size_t filter_length) {
    const std::size_t L = set.num_loudspeakers();
    const std::size_t J = filter_length;
    const std::size_t K = set.ir_length();
    const std::size_t M = set.mic_count(MicGroup::bright);
    if (d.per_mic.size() != M) throw ValidationError("desired pressure has wrong microphone count");
    const auto& kern = simd::active();
    Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(L * J));
    for (std::size_t m = 0; m < M; ++m) {
        if (d.per_mic[m].size() != K + J - 1) {
            throw ValidationError("desired pressure length must be K+J-1");
        }
        for (std::size_t l = 0; l < L; ++l) {
            const auto h = set.ir(position, MicGroup::bright, m, l);
            for (std::size_t j = 0; j < J; ++j) {
                r(static_cast<Eigen::Index>(l * J + j)) += kern.dot(h.data(), d.per_mic[m].data() + j, K);
            }
        }
    }
    return r;
}

namespace {

void check_square(const ZoneCovariance& a, const ZoneCovariance& b, std::size_t num_loudspeakers) {
    if (a.R.rows() != a.R.cols() || b.R.rows() != b.R.cols() || a.R.rows() != b.R.rows()) {
        throw ValidationError("bright and dark covariances must be square and equally sized");
    }
    if (num_loudspeakers == 0 || a.R.rows() % static_cast<Eigen::Index>(num_loudspeakers) != 0) {
        throw ValidationError("covariance size is not a multiple of the loudspeaker count");
    }
}

double condition_estimate(const Eigen::MatrixXd& A) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    return lo <= 0.0 ? std::numeric_limits<double>::infinity() : hi / lo;
}

void fix_sign(Eigen::VectorXd& q) {
    Eigen::Index idx = 0;
    q.cwiseAbs().maxCoeff(&idx);
    if (q(idx) < 0.0) q = -q;
}

ControlFilterSet make_set(const Eigen::VectorXd& q, std::size_t num_loudspeakers, DesignMethod method) {
    ControlFilterSet out;
    out.coefficients.assign(q.data(), q.data() + q.size());
    out.num_loudspeakers = num_loudspeakers;
    out.filter_length = static_cast<std::size_t>(q.size()) / num_loudspeakers;
    out.method = method;
    if (!std::all_of(out.coefficients.begin(), out.coefficients.end(),
                     [](double v) { return std::isfinite(v); })) {
        throw NumericalError("designed filter has non-finite coefficients");
    }
    return out;
}

}  // namespace

ControlFilterSet design_pm(const ZoneCovariance& bright, const ZoneCovariance& dark,
                           const Eigen::VectorXd& cross, double zeta, double lambda,
                           std::size_t num_loudspeakers) {
    check_square(bright, dark, num_loudspeakers);
    if (!(zeta >= 0.0 && zeta <= 1.0)) throw ValidationError("zeta must lie in [0, 1]");
    if (!(lambda > 0.0)) throw ValidationError("lambda must be positive");
    if (cross.size() != bright.R.rows()) throw ValidationError("cross vector has wrong length");

    Eigen::MatrixXd A = (1.0 - zeta) * bright.R + zeta * dark.R;
    A.diagonal().array() += lambda;
    const Eigen::VectorXd b = (1.0 - zeta) * cross;

    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("PM system is not positive definite (condition estimate " +
                             std::to_string(condition_estimate(A)) + ")");
    }
    Eigen::VectorXd q = llt.solve(b);
    const double b_norm = b.norm();
    Eigen::VectorXd residual = b - A * q;
    if (residual.norm() > 1e-8 * b_norm) {
        q += llt.solve(residual);  // one step of iterative refinement
        residual = b - A * q;
        if (residual.norm() > 1e-8 * b_norm) {
            throw NumericalError("PM solve residual too large (condition estimate " +
                                 std::to_string(condition_estimate(A)) + ")");
        }
    }
    auto out = make_set(q, num_loudspeakers, DesignMethod::pm);
    out.params.zeta = zeta;
    out.params.lambda = lambda;
    out.params.filter_length = out.filter_length;
    return out;
}

ControlFilterSet design_acc(const ZoneCovariance& bright, const ZoneCovariance& dark,
                            double lambda, double power_target, std::size_t num_loudspeakers) {
    check_square(bright, dark, num_loudspeakers);
    if (!(lambda > 0.0)) throw ValidationError("lambda must be positive");
    if (!(power_target > 0.0) || !std::isfinite(power_target)) {
        throw ValidationError("ACC power target must be positive");
    }

    Eigen::MatrixXd B = dark.R;
    B.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(B);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("Cholesky factorization of R_D + lambda I failed");
    }
    // Standard symmetric problem C^{-1} R_B C^{-T} v = mu v with B = C C^T.
    const auto C = llt.matrixL();
    const Eigen::MatrixXd left = C.solve(bright.R);              // C^{-1} R_B
    Eigen::MatrixXd M = C.solve(left.transpose());               // C^{-1} R_B C^{-T}
    M = 0.5 * (M + M.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    if (es.info() != Eigen::Success) throw NumericalError("symmetric eigensolver did not converge");

    const Eigen::Index top = M.rows() - 1;  // eigenvalues are ascending
    const double mu = es.eigenvalues()(top);
    Eigen::VectorXd q = llt.matrixU().solve(es.eigenvectors().col(top));

    const Eigen::VectorXd Rq = bright.R * q;
    const double residual = (Rq - mu * (B * q)).norm();
    if (residual > 1e-8 * Rq.norm() && Rq.norm() > 0.0) {
        throw NumericalError("generalized eigen-residual too large");
    }

    fix_sign(q);
    const double energy = q.dot(bright.R * q);
    if (energy > 0.0) {
        q *= std::sqrt(power_target / energy);
    } else {
        q.normalize();
    }
    auto out = make_set(q, num_loudspeakers, DesignMethod::acc);
    out.params.lambda = lambda;
    out.params.filter_length = out.filter_length;
    out.eigenvalue = mu;
    out.eigenvalue_zone_corrected = mu;
    return out;
}

ControlFilterSet design_mix(const MixInputs& inputs, DesignMethod method, const DesignParams& params,
                            std::size_t num_loudspeakers, const MicCounts& mics) {
    if (inputs.bright.empty() || inputs.dark.empty()) {
        throw ValidationError("mix design needs at least one position");
    }
    if (inputs.bright.size() != inputs.dark.size()) {
        throw ValidationError("mix design needs matching bright and dark lists");
    }
    const auto bright = mean_covariance(inputs.bright);
    const auto dark = mean_covariance(inputs.dark);
    ControlFilterSet out;
    if (method == DesignMethod::pm) {
        if (inputs.cross.size() != inputs.bright.size()) {
            throw ValidationError("PM mix design needs one cross vector per position");
        }
        Eigen::VectorXd cross = inputs.cross.front();
        for (std::size_t i = 1; i < inputs.cross.size(); ++i) cross += inputs.cross[i];
        cross /= static_cast<double>(inputs.cross.size());
        out = design_pm(bright, dark, cross, params.zeta, params.lambda, num_loudspeakers);
    } else {
        if (inputs.power_targets.size() != inputs.bright.size()) {
            throw ValidationError("ACC mix design needs one power target per position");
        }
        const double target =
            std::accumulate(inputs.power_targets.begin(), inputs.power_targets.end(), 0.0) /
            static_cast<double>(inputs.power_targets.size());
        out = design_acc(bright, dark, params.lambda, target, num_loudspeakers);
        out.eigenvalue_zone_corrected =
            out.eigenvalue * static_cast<double>(mics.bright) / static_cast<double>(mics.dark);
    }
    out.params = params;
    out.position.reset();
    return out;
}

PositionDesignData prepare_position(const IrSet& set, PositionId position, const DesignParams& params) {
    params.validate(set.num_loudspeakers());
    const std::size_t J = params.filter_length;
    PositionDesignData data{zone_covariance(set, position, MicGroup::bright, J),
                            zone_covariance(set, position, MicGroup::dark, J),
                            desired_pressure(set, position, params.l_ref, params.effective_delay(), J),
                            {}};
    data.cross = cross_vector(set, position, data.desired, J);
    return data;
}

namespace {

ControlFilterSet design_from(const PositionDesignData& data, PositionId position, DesignMethod method,
                             const DesignParams& params, std::size_t L, const MicCounts& mics) {
    ControlFilterSet out =
        method == DesignMethod::pm
            ? design_pm(data.bright, data.dark, data.cross, params.zeta, params.lambda, L)
            : design_acc(data.bright, data.dark, params.lambda, data.desired.energy(), L);
    if (method == DesignMethod::acc) {
        out.eigenvalue_zone_corrected =
            out.eigenvalue * static_cast<double>(mics.bright) / static_cast<double>(mics.dark);
    }
    out.params = params;
    out.position = position;
    return out;
}

}  // namespace

ControlFilterSet design_for_position(const IrSet& set, PositionId position, DesignMethod method,
                                     const DesignParams& params) {
    const auto data = prepare_position(set, position, params);
    return design_from(data, position, method, params, set.num_loudspeakers(), set.manifest().mics);
}

const ControlFilterSet& FilterDictionary::at(PositionId position) const {
    if (position.index >= entries.size()) {
        throw ValidationError("no dictionary entry for position " + std::to_string(position.index));
    }
    return entries[position.index];
}

Dictionaries build_dictionaries(const IrSet& set, DesignMethod method, const DesignParams& params) {
    params.validate(set.num_loudspeakers());
    const std::size_t S = set.num_positions();
    const std::size_t L = set.num_loudspeakers();
    std::vector<ZoneCovariance> bright, dark;
    std::vector<Eigen::VectorXd> cross;
    std::vector<double> targets;
    FilterDictionary dict;
    dict.method = method;
    dict.params = params;
    dict.num_loudspeakers = L;
    dict.source_ids = set.source_ids();
    for (std::size_t s = 0; s < S; ++s) {
        auto data = prepare_position(set, PositionId{s}, params);
        dict.entries.push_back(design_from(data, PositionId{s}, method, params, L, set.manifest().mics));
        targets.push_back(data.desired.energy());
        cross.push_back(std::move(data.cross));
        bright.push_back(std::move(data.bright));
        dark.push_back(std::move(data.dark));
    }
    auto mix = design_mix({bright, dark, cross, targets}, method, params, L, set.manifest().mics);
    return {std::move(dict), ObservationIrView(set), std::move(mix)};
}

void save_dictionary(const FilterDictionary& dict, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError(dir.string(), "cannot create directory: " + ec.message());
    std::vector<double> flat;
    for (const auto& e : dict.entries) flat.insert(flat.end(), e.coefficients.begin(), e.coefficients.end());
    write_f64_file(dir / ("dict_" + to_string(dict.method) + ".f64"), flat);

    nlohmann::json j{{"schema_version", 1},
                     {"method", to_string(dict.method)},
                     {"num_positions", dict.entries.size()},
                     {"num_loudspeakers", dict.num_loudspeakers},
                     {"filter_length_J", dict.params.filter_length},
                     {"lambda", dict.params.lambda},
                     {"zeta", dict.params.zeta},
                     {"l_ref", dict.params.l_ref},
                     {"delta", dict.params.effective_delay()},
                     {"source_ids", dict.source_ids}};
    const auto path = dir / "dict_manifest.json";
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(path.string(), "cannot open for writing");
    out << j.dump(2) << '\n';
    if (!out) throw IoError(path.string(), "write failed");
}

FilterDictionary load_dictionary(const std::filesystem::path& dir, DesignMethod method) {
    const auto path = dir / "dict_manifest.json";
    std::ifstream in(path);
    if (!in) throw IoError(path.string(), "missing file");
    FilterDictionary dict;
    std::size_t S = 0;
    try {
        const auto j = nlohmann::json::parse(in);
        if (j.at("schema_version").get<int>() != 1) throw ValidationError("unknown dictionary schema_version");
        dict.method = parse_design_method(j.at("method").get<std::string>());
        if (dict.method != method) throw ValidationError("dictionary method does not match request");
        S = j.at("num_positions").get<std::size_t>();
        dict.num_loudspeakers = j.at("num_loudspeakers").get<std::size_t>();
        dict.params.filter_length = j.at("filter_length_J").get<std::size_t>();
        dict.params.lambda = j.at("lambda").get<double>();
        dict.params.zeta = j.at("zeta").get<double>();
        dict.params.l_ref = j.at("l_ref").get<std::size_t>();
        dict.params.delay = j.at("delta").get<std::size_t>();
        dict.source_ids = j.at("source_ids").get<std::vector<std::size_t>>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    const std::size_t LJ = dict.num_loudspeakers * dict.params.filter_length;
    const auto fpath = dir / ("dict_" + to_string(method) + ".f64");
    const auto flat = read_f64_file(fpath);
    if (flat.size() != S * LJ) throw ValidationError(fpath.string() + ": size mismatch");
    for (std::size_t s = 0; s < S; ++s) {
        ControlFilterSet e;
        e.coefficients.assign(flat.begin() + static_cast<std::ptrdiff_t>(s * LJ),
                              flat.begin() + static_cast<std::ptrdiff_t>((s + 1) * LJ));
        e.num_loudspeakers = dict.num_loudspeakers;
        e.filter_length = dict.params.filter_length;
        e.method = method;
        e.position = PositionId{s};
        e.params = dict.params;
        dict.entries.push_back(std::move(e));
    }
    return dict;
}

}  // namespace szc
