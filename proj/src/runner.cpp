#include "pmdtk/runner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "pmdtk/io.hpp"
#include "pmdtk/mmm.hpp"
#include "pmdtk/protocol.hpp"
#include "pmdtk/svg.hpp"

namespace pmdtk {

namespace {

using nlohmann::json;

std::string csv_row(std::initializer_list<double> values) {
    std::string row;
    for (double v : values) {
        if (!row.empty()) {
            row += ',';
        }
        row += format_double(v);
    }
    return row + '\n';
}

json budget_to_json(const ErrorBudget& budget) {
    return json{{"per_state", budget.per_state},
                {"per_basis", budget.per_basis},
                {"weighted_average", budget.weighted_average}};
}

struct Regression {
    double slope;
    double intercept;
    double r;
};

Regression linear_fit(std::span<const double> x, std::span<const double> y) {
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        syy += y[i] * y[i];
    }
    const double vxx = sxx - sx * sx / n;
    const double vxy = sxy - sx * sy / n;
    const double vyy = syy - sy * sy / n;
    Regression fit;
    fit.slope = vxy / vxx;
    fit.intercept = (sy - fit.slope * sx) / n;
    fit.r = vyy > 0.0 ? vxy / std::sqrt(vxx * vyy) : 0.0;
    return fit;
}

} // namespace

SpectralGrid GridOptions::make() const { return SpectralGrid::from_step(start_nm, stop_nm, step_nm); }

FiberRealization FiberOptions::realize() const {
    if (fiber_in) {
        return FiberRealization::load_json(*fiber_in);
    }
    return synthesize_fiber(FiberSpec{length_km, pmd_coeff, segments, seed});
}

void run_simulate(const SimulateOptions& opts) {
    if (opts.states.empty()) {
        throw ValidationError("simulate needs at least one launched state");
    }
    const FiberRealization fiber = opts.fiber.realize();
    const SpectralGrid grid = opts.grid.make();
    const auto& dir = opts.output.out_dir;

    fiber.save_json(dir / "fiber.json");

    std::vector<Trajectory> trajectories;
    for (const std::string& label : opts.states) {
        const Stokes in = state_from_label(label);
        Trajectory traj = propagate_trajectory(fiber, stokes_to_jones(in), grid);
        if (traj.undersampled) {
            std::cerr << "warning: state " << label
                      << " trajectory moves >= pi/4 between grid points; "
                         "decrease the grid step\n";
        }
        std::string csv = "wavelength_nm,s1,s2,s3\n";
        for (std::size_t i = 0; i < traj.states.size(); ++i) {
            csv += csv_row({traj.wavelengths_nm[i], traj.states[i].x(), traj.states[i].y(),
                            traj.states[i].z()});
        }
        atomic_write_text(dir / ("trajectory_" + label + ".csv"), csv);
        trajectories.push_back(std::move(traj));
    }

    // Combined MMM-ready scan.
    std::string scan = "wavelength_nm,state_label,s1,s2,s3\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (std::size_t s = 0; s < opts.states.size(); ++s) {
            const Stokes& st = trajectories[s].states[i];
            scan += format_double(grid[i]) + "," + opts.states[s] + "," + format_double(st.x()) +
                    "," + format_double(st.y()) + "," + format_double(st.z()) + "\n";
        }
    }
    atomic_write_text(dir / "scan.csv", scan);

    const auto pmd = pmd_vector_spectrum(fiber, grid);
    std::string dgd_csv = "wavelength_nm,dgd_ps,psp_s1,psp_s2,psp_s3\n";
    for (const PMDVectorSample& s : pmd) {
        const double dgd = s.dgd_ps();
        const Stokes psp = dgd > 1e-12 ? Stokes(s.omega_vec_ps.normalized()) : Stokes(1, 0, 0);
        dgd_csv += csv_row({s.wavelength_nm, dgd, psp.x(), psp.y(), psp.z()});
    }
    atomic_write_text(dir / "dgd.csv", dgd_csv);

    if (opts.output.svg) {
        std::vector<SvgSeries> traj_series;
        const char* names[] = {"s1", "s2", "s3"};
        for (int c = 0; c < 3; ++c) {
            SvgSeries s;
            s.label = std::string(opts.states.front()) + " " + names[c];
            s.x = trajectories.front().wavelengths_nm;
            for (const Stokes& st : trajectories.front().states) {
                s.y.push_back(st(c));
            }
            traj_series.push_back(std::move(s));
        }
        write_svg_chart(dir / "trajectory.svg", "Output polarization vs wavelength",
                        "wavelength (nm)", "Stokes component", traj_series);

        SvgSeries dgd_series;
        dgd_series.label = "DGD";
        for (const PMDVectorSample& s : pmd) {
            dgd_series.x.push_back(s.wavelength_nm);
            dgd_series.y.push_back(s.dgd_ps());
        }
        write_svg_chart(dir / "dgd.svg", "DGD spectrum", "wavelength (nm)", "DGD (ps)",
                        {dgd_series});
    }
}

void run_infidelity(const InfidelityOptions& opts) {
    const FiberRealization fiber = opts.fiber.realize();
    const SpectralGrid grid = opts.grid.make();
    const auto& dir = opts.output.out_dir;

    const std::array<std::string, 4> labels = {"H", "V", "D", "A"};
    std::map<std::string, std::vector<CurvePoint>> curves;
    for (const std::string& label : labels) {
        Trajectory traj = propagate_trajectory(fiber, stokes_to_jones(state_from_label(label)), grid);
        if (traj.undersampled) {
            std::cerr << "warning: state " << label
                      << " trajectory is under-sampled on this grid\n";
        }
        curves[label] = rolling_infidelity(traj, opts.window_nm);
    }
    const auto dgd_series = dgd_spectrum(fiber, grid);
    const auto bound = dgd_based_infidelity(dgd_series, opts.window_nm);

    // Rows where every column is defined: the DGD series lives on the grid's
    // interior points, so its curve starts one step later than the rolling
    // ones; index the rolling curves by wavelength.
    std::map<double, std::array<double, 4>> rolling_at;
    for (std::size_t s = 0; s < labels.size(); ++s) {
        for (const CurvePoint& p : curves[labels[s]]) {
            rolling_at[p.wavelength_nm][s] = p.p_e;
        }
    }
    std::string csv = "wavelength_nm,p_e_H,p_e_V,p_e_D,p_e_A,p_e_dgd_bound\n";
    for (const CurvePoint& b : bound) {
        const auto it = rolling_at.find(b.wavelength_nm);
        if (it == rolling_at.end()) {
            continue;
        }
        const auto& r = it->second;
        csv += csv_row({b.wavelength_nm, r[0], r[1], r[2], r[3], b.p_e});
    }
    atomic_write_text(dir / "infidelity.csv", csv);

    if (opts.output.svg) {
        std::vector<SvgSeries> series;
        for (const std::string& label : labels) {
            SvgSeries s;
            s.label = "p_e " + label;
            for (const CurvePoint& p : curves[label]) {
                s.x.push_back(p.wavelength_nm);
                s.y.push_back(p.p_e);
            }
            series.push_back(std::move(s));
        }
        SvgSeries sb;
        sb.label = "DGD bound";
        for (const CurvePoint& p : bound) {
            sb.x.push_back(p.wavelength_nm);
            sb.y.push_back(p.p_e);
        }
        series.push_back(std::move(sb));
        write_svg_chart(dir / "infidelity.svg", "Rolling infidelity vs wavelength",
                        "wavelength (nm)", "p_e", series);
    }
}

void run_sweep(const SweepOptions& opts) {
    if (opts.lengths_km.empty() || opts.widths_nm.empty()) {
        throw ValidationError("sweep needs non-empty length and width lists");
    }
    EnsembleOptions eopts;
    eopts.n_segments = opts.segments;
    eopts.center_nm = opts.center_nm;
    eopts.band_samples = opts.band_samples;
    if (opts.states == "equatorial") {
        eopts.policy = InputStatePolicy::equatorial;
    } else if (opts.states == "uniform") {
        eopts.policy = InputStatePolicy::uniform;
    } else {
        throw ValidationError("states policy must be 'equatorial' or 'uniform'");
    }

    const auto cells = ensemble_mean_infidelity(opts.pmd_coeff, opts.lengths_km, opts.widths_nm,
                                                opts.realizations, opts.seed, eopts);
    std::string csv = "distance_km,bandwidth_nm,p_e_mean,p_e_std,p_e_dgd_method\n";
    for (const EnsembleCell& c : cells) {
        csv += csv_row({c.length_km, c.width_nm, c.p_e_mean, c.p_e_std, c.p_e_dgd_method});
    }
    atomic_write_text(opts.output.out_dir / "sweep.csv", csv);

    if (opts.output.svg) {
        std::vector<SvgSeries> series;
        for (std::size_t wi = 0; wi < opts.widths_nm.size(); ++wi) {
            SvgSeries s;
            s.label = format_double(opts.widths_nm[wi]) + " nm";
            for (std::size_t li = 0; li < opts.lengths_km.size(); ++li) {
                const EnsembleCell& c = cells[li * opts.widths_nm.size() + wi];
                s.x.push_back(c.length_km);
                s.y.push_back(c.p_e_mean);
            }
            series.push_back(std::move(s));
        }
        write_svg_chart(opts.output.out_dir / "sweep.svg", "Mean infidelity vs distance",
                        "distance (km)", "p_e", series);
    }
}

namespace {

std::map<std::string, Stokes> parse_declared_inputs(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open declared-inputs file " + path.string());
    }
    std::map<std::string, Stokes> declared;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::stringstream ss(line);
        std::string label, f1, f2, f3;
        if (!std::getline(ss, label, ',') || !std::getline(ss, f1, ',') ||
            !std::getline(ss, f2, ',') || !std::getline(ss, f3)) {
            throw ValidationError("declared-inputs line " + std::to_string(line_no) +
                                  ": expected label,s1,s2,s3");
        }
        try {
            declared[label] = Stokes(std::stod(f1), std::stod(f2), std::stod(f3));
        } catch (const std::exception&) {
            throw ValidationError("declared-inputs line " + std::to_string(line_no) +
                                  ": bad Stokes component");
        }
    }
    return declared;
}

} // namespace

void run_mmm(const MmmOptions& opts) {
    std::map<std::string, Stokes> declared;
    if (opts.inputs_path) {
        declared = parse_declared_inputs(*opts.inputs_path);
    }
    const ScanSet scan = parse_scan_file(opts.scan_path, std::move(declared));
    const auto pairs = scan.perpendicular_pairs();
    const DGDReport report = dgd_report(scan, pairs.front());

    std::string csv = "wavelength_nm,dgd_ps,psp_s1,psp_s2,psp_s3\n";
    for (const DGDRecord& r : report.records) {
        csv += csv_row({r.wavelength_nm, r.dgd_ps, r.psp.x(), r.psp.y(), r.psp.z()});
    }
    atomic_write_text(opts.output.out_dir / "dgd.csv", csv);

    json summary;
    summary["pair"] = {pairs.front().first, pairs.front().second};
    summary["n_records"] = report.records.size();
    summary["mean_dgd_ps"] = report.summary.mean_dgd_ps;
    summary["std_dgd_ps"] = report.summary.std_dgd_ps;
    if (report.summary.delta_lambda0_nm) {
        summary["delta_lambda0_nm"] = *report.summary.delta_lambda0_nm;
    } else {
        summary["delta_lambda0_nm"] = nullptr;
    }
    if (pairs.size() >= 2) {
        const DGDReport second = dgd_report(scan, pairs[1]);
        double max_rel = 0.0;
        for (std::size_t i = 0; i < report.records.size(); ++i) {
            const double a = report.records[i].dgd_ps;
            const double b = second.records[i].dgd_ps;
            const double scale = std::max(0.5 * (a + b), 1e-12);
            max_rel = std::max(max_rel, std::abs(a - b) / scale);
        }
        summary["reproducibility"] = {
            {"second_pair", {pairs[1].first, pairs[1].second}},
            {"max_rel_dgd_diff", max_rel},
        };
    }
    atomic_write_text(opts.output.out_dir / "summary.json", summary.dump(2) + "\n");

    if (opts.output.svg) {
        SvgSeries s;
        s.label = "DGD (" + pairs.front().first + "," + pairs.front().second + ")";
        for (const DGDRecord& r : report.records) {
            s.x.push_back(r.wavelength_nm);
            s.y.push_back(r.dgd_ps);
        }
        write_svg_chart(opts.output.out_dir / "dgd.svg", "MMM DGD spectrum", "wavelength (nm)",
                        "DGD (ps)", {s});
    }
}

namespace {

struct MeasuredSeries {
    std::vector<double> distance_km;
    std::vector<double> qber;
};

MeasuredSeries parse_measured(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open measured series " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw ValidationError("measured series is empty");
    }
    MeasuredSeries series;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::stringstream ss(line);
        std::vector<std::string> fields;
        std::string f;
        while (std::getline(ss, f, ',')) {
            fields.push_back(f);
        }
        if (fields.size() != 2 && fields.size() != 3) {
            throw ValidationError("measured line " + std::to_string(line_no) +
                                  ": expected distance_km,qber[,sigma]");
        }
        double d, q;
        try {
            d = std::stod(fields[0]);
            q = std::stod(fields[1]);
            if (fields.size() == 3) {
                (void)std::stod(fields[2]); // uncertainty accepted, not used in the fit
            }
        } catch (const std::exception&) {
            throw ValidationError("measured line " + std::to_string(line_no) + ": bad number");
        }
        if (!series.distance_km.empty() && d <= series.distance_km.back()) {
            throw ValidationError("measured line " + std::to_string(line_no) +
                                  ": distances must be strictly increasing");
        }
        if (q < 0.0 || q > 0.5) {
            throw ValidationError("measured line " + std::to_string(line_no) +
                                  ": QBER must lie in [0, 0.5]");
        }
        series.distance_km.push_back(d);
        series.qber.push_back(q);
    }
    if (series.distance_km.size() < 2) {
        throw ValidationError("measured series needs at least 2 points");
    }
    return series;
}

} // namespace

void run_qber_model(const QberModelOptions& opts) {
    if (opts.lengths_km.empty()) {
        throw ValidationError("qber-model needs a distance list");
    }
    if (opts.baseline < 0.0 || opts.baseline > 0.5) {
        throw ValidationError("baseline QBER must lie in [0, 0.5]");
    }
    const BandSpec band(opts.center_nm, opts.width_nm);

    std::string csv = "distance_km,p_e_model\n";
    std::vector<double> model;
    for (double l : opts.lengths_km) {
        if (!(l > 0.0)) {
            throw ValidationError("distances must be positive");
        }
        const double p = opts.baseline + analytic_ensemble_mean(opts.pmd_coeff, l, band);
        model.push_back(p);
        csv += csv_row({l, p});
    }
    atomic_write_text(opts.output.out_dir / "qber_model.csv", csv);

    json summary;
    summary["pmd_coeff"] = opts.pmd_coeff;
    summary["width_nm"] = opts.width_nm;
    summary["center_nm"] = opts.center_nm;
    summary["baseline"] = opts.baseline;
    summary["model_slope_per_km"] =
        opts.lengths_km.size() > 1 ? analytic_ensemble_mean(opts.pmd_coeff, 1.0, band) : 0.0;

    std::vector<SvgSeries> series;
    {
        SvgSeries s;
        s.label = "model";
        s.x = opts.lengths_km;
        s.y = model;
        series.push_back(std::move(s));
    }
    if (opts.measured_path) {
        const MeasuredSeries measured = parse_measured(*opts.measured_path);
        const Regression fit = linear_fit(measured.distance_km, measured.qber);
        summary["regression"] = {
            {"slope_per_km", fit.slope}, {"intercept", fit.intercept}, {"r", fit.r}};
        SvgSeries s;
        s.label = "measured";
        s.x = measured.distance_km;
        s.y = measured.qber;
        series.push_back(std::move(s));
    }
    atomic_write_text(opts.output.out_dir / "summary.json", summary.dump(2) + "\n");

    if (opts.output.svg) {
        write_svg_chart(opts.output.out_dir / "qber_model.svg", "Modeled infidelity vs distance",
                        "distance (km)", "p_e", series);
    }
}

void run_basis_study(const BasisStudyOptions& opts) {
    if (opts.omega_axis.size() != 3) {
        throw ValidationError("omega axis needs 3 components");
    }
    Stokes axis(opts.omega_axis[0], opts.omega_axis[1], opts.omega_axis[2]);
    if (axis.norm() < 1e-9) {
        throw ValidationError("omega axis must be non-zero");
    }
    axis.normalize();

    double delta_theta = opts.delta_theta;
    json doc;
    if (opts.fiber_in) {
        const FiberRealization fiber = FiberRealization::load_json(*opts.fiber_in);
        const SpectralGrid grid = opts.grid.make();
        const BandSpec band(opts.center_nm, opts.width_nm);
        const double probe_step = 0.05;
        const double probe[3] = {opts.center_nm - probe_step, opts.center_nm,
                                 opts.center_nm + probe_step};
        const auto pmd = pmd_vector_spectrum(fiber, probe);
        const double dgd_c = pmd[0].dgd_ps();
        if (dgd_c < 1e-9) {
            throw ValidationError("fiber has no measurable DGD at the band center");
        }
        axis = pmd[0].omega_vec_ps.normalized();
        delta_theta = arc_angle(dgd_c, band);
        doc["fiber"] = {{"dgd_at_center_ps", dgd_c}, {"band_width_nm", band.width_nm}};

        const HigherOrderReport higher = higher_order_report(fiber, band, grid);
        json ho;
        ho["delta_lambda0_nm"] =
            higher.delta_lambda0_nm ? json(*higher.delta_lambda0_nm) : json(nullptr);
        ho["p_e_osc"] = higher.p_e_osc ? json(*higher.p_e_osc) : json(nullptr);
        ho["psp_arc_rad"] = higher.psp_arc_rad;
        ho["p_e_psp_two_channel"] = higher.p_e_psp_two_channel;
        doc["higher_order"] = ho;
    }
    if (delta_theta < 0.0) {
        throw ValidationError("arc angle must be non-negative");
    }

    doc["delta_theta_rad"] = delta_theta;
    doc["omega_axis"] = {axis.x(), axis.y(), axis.z()};

    const ProtocolSpec protocol = ProtocolSpec::bb84(opts.p_z);

    // The three canonical circle orientations relative to the PMD axis.
    const FourStateCircle orthogonal(axis, 0.0);
    const Stokes normal = axis.cross(FourStateCircle::in_plane_reference(axis)).normalized();
    const Stokes e1 = FourStateCircle::in_plane_reference(normal);
    const Stokes e2 = normal.cross(e1);
    const double beta = std::atan2(axis.dot(e2), axis.dot(e1));
    const FourStateCircle psp_aligned(normal, beta);
    const FourStateCircle symmetric(normal, beta + std::numbers::pi / 4.0);

    doc["geometries"] = {
        {"orthogonal", budget_to_json(protocol_error_budget(protocol, orthogonal, axis, delta_theta))},
        {"psp_aligned",
         budget_to_json(protocol_error_budget(protocol, psp_aligned, axis, delta_theta))},
        {"symmetric", budget_to_json(protocol_error_budget(protocol, symmetric, axis, delta_theta))},
    };
    doc["six_state_average"] = six_state_average(StokesTriad::identity(), axis, delta_theta);

    OrientationObjective objective = OrientationObjective::balance_ratio(opts.ratio);
    if (opts.objective == "min_weighted") {
        objective = OrientationObjective::min_weighted();
    } else if (opts.objective != "balance") {
        throw ValidationError("objective must be 'balance' or 'min_weighted'");
    }
    const OrientationResult result = optimize_orientation(protocol, axis, delta_theta, objective);
    doc["optimization"] = {{"objective", opts.objective},
                           {"alpha_rad", result.alpha_rad},
                           {"budget", budget_to_json(result.budget)}};

    atomic_write_text(opts.output.out_dir / "basis_study.json", doc.dump(2) + "\n");
}

} // namespace pmdtk
