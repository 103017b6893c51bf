#include <cctype>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pmdtk/errors.hpp"
#include "pmdtk/runner.hpp"

namespace {

std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(item, &pos));
            while (pos < item.size() && std::isspace(static_cast<unsigned char>(item[pos]))) {
                ++pos;
            }
            if (pos != item.size()) {
                throw std::invalid_argument(item);
            }
        } catch (const std::exception&) {
            throw pmdtk::ValidationError(what + ": bad number '" + item + "'");
        }
    }
    if (out.empty()) {
        throw pmdtk::ValidationError(what + ": empty list");
    }
    return out;
}

std::vector<std::string> parse_label_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) {
        ++b;
    }
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) {
        --e;
    }
    return s.substr(b, e - b);
}

/// Flat key=value config file -> `--key=value` tokens. Inserted ahead of the
/// explicit command-line flags, so the command line wins on conflicts.
std::vector<std::string> load_config_tokens(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw pmdtk::IoError("cannot open config file " + path);
    }
    std::vector<std::string> tokens;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') {
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos || trim(t.substr(0, eq)).empty()) {
            throw pmdtk::ValidationError(path + " line " + std::to_string(line_no) +
                                         ": expected key=value");
        }
        tokens.push_back("--" + trim(t.substr(0, eq)) + "=" + trim(t.substr(eq + 1)));
    }
    return tokens;
}

void add_config_option(CLI::App* sub, std::string& holder) {
    sub->add_option("--config", holder,
                    "Key=value file; any key is the matching long option without dashes");
}

void add_output_options(CLI::App* sub, pmdtk::OutputOptions& out) {
    sub->add_option("--out", out.out_dir, "Output directory")->capture_default_str();
    sub->add_flag("--svg", out.svg, "Also write SVG charts");
}

void add_grid_options(CLI::App* sub, pmdtk::GridOptions& grid) {
    sub->add_option("--start", grid.start_nm, "Grid start wavelength (nm)")->capture_default_str();
    sub->add_option("--stop", grid.stop_nm, "Grid stop wavelength (nm)")->capture_default_str();
    sub->add_option("--step", grid.step_nm, "Grid step (nm)")->capture_default_str();
}

void add_fiber_options(CLI::App* sub, pmdtk::FiberOptions& fiber, std::string& fiber_in) {
    sub->add_option("--length", fiber.length_km, "Fiber length (km)")->capture_default_str();
    sub->add_option("--coeff", fiber.pmd_coeff, "PMD coefficient (ps/sqrt(km))")
        ->capture_default_str();
    sub->add_option("--segments", fiber.segments, "Number of birefringent segments")
        ->capture_default_str();
    sub->add_option("--seed", fiber.seed, "RNG seed")->capture_default_str();
    sub->add_option("--fiber-in", fiber_in,
                    "Load this fiber JSON instead of synthesizing a new one");
}

/// Let a config-file token for the same option be overridden by a later
/// command-line token instead of raising a duplicate-option error.
void make_overridable(CLI::App* sub) {
    for (CLI::Option* opt : sub->get_options()) {
        if (opt->get_expected_min() > 0) {
            opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
        }
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fiber PMD emulation and polarization-entanglement error analysis"};
    app.require_subcommand(1);

    // --- simulate ---------------------------------------------------------
    pmdtk::SimulateOptions sim;
    std::string sim_config;
    std::string sim_fiber_in;
    std::string sim_states = "H,D";
    auto* sub_sim = app.add_subcommand(
        "simulate", "Synthesize a fiber and record trajectories, scan and DGD spectrum");
    add_config_option(sub_sim, sim_config);
    add_fiber_options(sub_sim, sim.fiber, sim_fiber_in);
    add_grid_options(sub_sim, sim.grid);
    sub_sim->add_option("--states", sim_states, "Comma-separated launched state labels")
        ->capture_default_str();
    add_output_options(sub_sim, sim.output);
    sub_sim->callback([&] {
        if (!sim_fiber_in.empty()) {
            sim.fiber.fiber_in = sim_fiber_in;
        }
        sim.states = parse_label_list(sim_states);
        pmdtk::run_simulate(sim);
    });

    // --- infidelity -------------------------------------------------------
    pmdtk::InfidelityOptions inf;
    std::string inf_config;
    std::string inf_fiber_in;
    auto* sub_inf = app.add_subcommand(
        "infidelity", "Rolling band-averaged infidelity for H/V/D/A plus the DGD-method bound");
    add_config_option(sub_inf, inf_config);
    add_fiber_options(sub_inf, inf.fiber, inf_fiber_in);
    add_grid_options(sub_inf, inf.grid);
    sub_inf->add_option("--window", inf.window_nm, "Averaging window (nm)")->capture_default_str();
    add_output_options(sub_inf, inf.output);
    sub_inf->callback([&] {
        if (!inf_fiber_in.empty()) {
            inf.fiber.fiber_in = inf_fiber_in;
        }
        pmdtk::run_infidelity(inf);
    });

    // --- sweep ------------------------------------------------------------
    pmdtk::SweepOptions sweep;
    std::string sweep_config;
    std::string sweep_lengths = "10,25,50,75,100,125,150,175,200";
    std::string sweep_widths = "0.25,0.5,1,2";
    auto* sub_sweep = app.add_subcommand(
        "sweep", "Monte Carlo mean infidelity over distance and filter-bandwidth grids");
    add_config_option(sub_sweep, sweep_config);
    sub_sweep->add_option("--coeff", sweep.pmd_coeff, "PMD coefficient (ps/sqrt(km))")
        ->capture_default_str();
    sub_sweep->add_option("--lengths", sweep_lengths, "Comma-separated distances (km)")
        ->capture_default_str();
    sub_sweep->add_option("--widths", sweep_widths, "Comma-separated filter widths (nm)")
        ->capture_default_str();
    sub_sweep->add_option("--realizations", sweep.realizations, "Fiber realizations per cell")
        ->capture_default_str();
    sub_sweep->add_option("--segments", sweep.segments, "Segments per realization")
        ->capture_default_str();
    sub_sweep->add_option("--center", sweep.center_nm, "Band center (nm)")->capture_default_str();
    sub_sweep->add_option("--band-samples", sweep.band_samples, "Quadrature samples per band")
        ->capture_default_str();
    sub_sweep->add_option("--states", sweep.states, "Input-state policy: equatorial | uniform")
        ->capture_default_str();
    sub_sweep->add_option("--seed", sweep.seed, "Master RNG seed")->capture_default_str();
    add_output_options(sub_sweep, sweep.output);
    sub_sweep->callback([&] {
        sweep.lengths_km = parse_double_list(sweep_lengths, "--lengths");
        sweep.widths_nm = parse_double_list(sweep_widths, "--widths");
        pmdtk::run_sweep(sweep);
    });

    // --- mmm --------------------------------------------------------------
    pmdtk::MmmOptions mmm;
    std::string mmm_config;
    std::string mmm_scan;
    std::string mmm_inputs;
    auto* sub_mmm = app.add_subcommand(
        "mmm", "Extract the DGD spectrum from a polarimeter scan (Mueller Matrix Method)");
    add_config_option(sub_mmm, mmm_config);
    sub_mmm->add_option("--scan", mmm_scan, "Scan CSV: wavelength_nm,state_label,s1,s2,s3")
        ->required();
    sub_mmm->add_option("--inputs", mmm_inputs,
                        "Declared launched states: lines `label,s1,s2,s3` "
                        "(H/V/D/A/R/L are implicit)");
    add_output_options(sub_mmm, mmm.output);
    sub_mmm->callback([&] {
        mmm.scan_path = mmm_scan;
        if (!mmm_inputs.empty()) {
            mmm.inputs_path = mmm_inputs;
        }
        pmdtk::run_mmm(mmm);
    });

    // --- qber-model -------------------------------------------------------
    pmdtk::QberModelOptions qber;
    std::string qber_config;
    std::string qber_lengths = "10,20,30,40,50,60,70,80,90,100";
    std::string qber_measured;
    auto* sub_qber = app.add_subcommand(
        "qber-model", "Analytic ensemble-mean infidelity vs distance, optional measured-data fit");
    add_config_option(sub_qber, qber_config);
    sub_qber->add_option("--coeff", qber.pmd_coeff, "PMD coefficient (ps/sqrt(km))")
        ->capture_default_str();
    sub_qber->add_option("--width", qber.width_nm, "Filter bandwidth (nm)")->capture_default_str();
    sub_qber->add_option("--center", qber.center_nm, "Band center (nm)")->capture_default_str();
    sub_qber->add_option("--lengths", qber_lengths, "Comma-separated distances (km)")
        ->capture_default_str();
    sub_qber->add_option("--baseline", qber.baseline, "Distance-independent baseline error")
        ->capture_default_str();
    sub_qber->add_option("--measured", qber_measured,
                         "Measured series CSV: distance_km,qber[,sigma]");
    add_output_options(sub_qber, qber.output);
    sub_qber->callback([&] {
        qber.lengths_km = parse_double_list(qber_lengths, "--lengths");
        if (!qber_measured.empty()) {
            qber.measured_path = qber_measured;
        }
        pmdtk::run_qber_model(qber);
    });

    // --- basis-study ------------------------------------------------------
    pmdtk::BasisStudyOptions basis;
    std::string basis_config;
    std::string basis_axis = "1,0,0";
    std::string basis_fiber_in;
    auto* sub_basis = app.add_subcommand(
        "basis-study", "Error budgets vs measurement-basis orientation for a PMD channel");
    add_config_option(sub_basis, basis_config);
    sub_basis->add_option("--delta-theta", basis.delta_theta, "Band arc angle (rad)")
        ->capture_default_str();
    sub_basis->add_option("--axis", basis_axis, "PMD axis s1,s2,s3 (ignored with --fiber-in)")
        ->capture_default_str();
    sub_basis->add_option("--p-z", basis.p_z, "Probability of the basis of states {0,2}")
        ->capture_default_str();
    sub_basis
        ->add_option("--objective", basis.objective, "Orientation objective: balance | min_weighted")
        ->capture_default_str();
    sub_basis->add_option("--ratio", basis.ratio, "Target per-basis error ratio for 'balance'")
        ->capture_default_str();
    sub_basis->add_option("--fiber-in", basis_fiber_in,
                          "Derive axis and arc angle from this fiber JSON");
    add_grid_options(sub_basis, basis.grid);
    sub_basis->add_option("--center", basis.center_nm, "Band center (nm)")->capture_default_str();
    sub_basis->add_option("--width", basis.width_nm, "Band width (nm)")->capture_default_str();
    add_output_options(sub_basis, basis.output);
    sub_basis->callback([&] {
        basis.omega_axis = parse_double_list(basis_axis, "--axis");
        if (!basis_fiber_in.empty()) {
            basis.fiber_in = basis_fiber_in;
        }
        pmdtk::run_basis_study(basis);
    });

    for (CLI::App* sub : {sub_sim, sub_inf, sub_sweep, sub_mmm, sub_qber, sub_basis}) {
        make_overridable(sub);
    }

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        std::string config_path;
        for (std::size_t i = 1; i < args.size(); ++i) {
            if (args[i] == "--config" && i + 1 < args.size()) {
                config_path = args[i + 1];
            } else if (args[i].rfind("--config=", 0) == 0) {
                config_path = args[i].substr(9);
            }
        }
        if (!config_path.empty()) {
            const auto tokens = load_config_tokens(config_path);
            args.insert(args.begin() + 1, tokens.begin(), tokens.end());
        }
        std::vector<const char*> cargv;
        cargv.push_back(argv[0]);
        for (const std::string& a : args) {
            cargv.push_back(a.c_str());
        }
        app.parse(static_cast<int>(cargv.size()), cargv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const pmdtk::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 2;
    } catch (const pmdtk::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
