#include "mflab/io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "mflab/errors.hpp"

namespace mflab {

namespace {

// SHA-256 (FIPS 180-4), compact single-buffer implementation.
struct Sha256 {
    std::uint32_t state[8] = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                              0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
    std::uint64_t length = 0;
    unsigned char buffer[64];
    std::size_t buffered = 0;

    static std::uint32_t rotr(std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

    void process(const unsigned char* p) {
        static const std::uint32_t k[64] = {
            0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1,
            0x923f82a4, 0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3,
            0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786,
            0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
            0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147,
            0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13,
            0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
            0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
            0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a,
            0x5b9cca4f, 0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208,
            0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};
        std::uint32_t w[64];
        for (int i = 0; i < 16; ++i)
            w[i] = (std::uint32_t(p[4 * i]) << 24) | (std::uint32_t(p[4 * i + 1]) << 16) |
                   (std::uint32_t(p[4 * i + 2]) << 8) | std::uint32_t(p[4 * i + 3]);
        for (int i = 16; i < 64; ++i) {
            const std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
            const std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16] + s0 + w[i - 7] + s1;
        }
        std::uint32_t a = state[0], b = state[1], c = state[2], d = state[3];
        std::uint32_t e = state[4], f = state[5], g = state[6], h = state[7];
        for (int i = 0; i < 64; ++i) {
            const std::uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
            const std::uint32_t ch = (e & f) ^ (~e & g);
            const std::uint32_t t1 = h + s1 + ch + k[i] + w[i];
            const std::uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
            const std::uint32_t mj = (a & b) ^ (a & c) ^ (b & c);
            const std::uint32_t t2 = s0 + mj;
            h = g;
            g = f;
            f = e;
            e = d + t1;
            d = c;
            c = b;
            b = a;
            a = t1 + t2;
        }
        state[0] += a;
        state[1] += b;
        state[2] += c;
        state[3] += d;
        state[4] += e;
        state[5] += f;
        state[6] += g;
        state[7] += h;
    }

    void update(const unsigned char* data, std::size_t n) {
        length += n;
        while (n > 0) {
            const std::size_t take = std::min(n, 64 - buffered);
            std::memcpy(buffer + buffered, data, take);
            buffered += take;
            data += take;
            n -= take;
            if (buffered == 64) {
                process(buffer);
                buffered = 0;
            }
        }
    }

    std::string finish() {
        const std::uint64_t bits = length * 8;
        unsigned char pad = 0x80;
        update(&pad, 1);
        unsigned char zero = 0;
        while (buffered != 56) update(&zero, 1);
        unsigned char len[8];
        for (int i = 0; i < 8; ++i) len[i] = static_cast<unsigned char>(bits >> (56 - 8 * i));
        update(len, 8);
        char out[65];
        for (int i = 0; i < 8; ++i) std::snprintf(out + 8 * i, 9, "%08x", state[i]);
        return std::string(out, 64);
    }
};

char* fmt(char* buf, std::size_t n, double v) {
    std::snprintf(buf, n, "%.17g", v);
    return buf;
}

void write_raw(std::ofstream& os, const void* p, std::size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <typename T>
T read_raw(std::ifstream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw NumericalError("binary read: truncated file");
    return v;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
    Sha256 h;
    h.update(reinterpret_cast<const unsigned char*>(data.data()), data.size());
    return h.finish();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot open for writing: " + path.string());
    os << content;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open for reading: " + path.string());
    std::string data((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return data;
}

std::string sample_csv(const LatticeSample& sample) {
    std::string out = "theta0";
    for (int k = 1; k < sample.dim; ++k) out += ",theta" + std::to_string(k);
    for (int k = 0; k < sample.dim; ++k) out += ",x" + std::to_string(k);
    out += ",weight\n";
    char buf[64];
    for (std::size_t i = 0; i < sample.count(); ++i) {
        for (int k = 0; k < sample.dim; ++k) {
            if (k) out += ',';
            out += std::to_string(sample.indices[i][k]);
        }
        for (int k = 0; k < sample.dim; ++k) {
            out += ',';
            out += fmt(buf, sizeof buf, sample.positions[i][k]);
        }
        out += ',';
        out += fmt(buf, sizeof buf, sample.weights[i]);
        out += '\n';
    }
    return out;
}

ordered_json sample_json(const LatticeSample& sample) {
    ordered_json j;
    j["dim"] = sample.dim;
    j["h"] = sample.h;
    j["count"] = sample.count();
    j["lower_volume"] = sample.lower_volume;
    j["fattened_volume"] = sample.fattened_volume;
    j["lattice_volume"] = std::pow(sample.h, sample.dim) * static_cast<double>(sample.count());
    j["total_mass"] = total_mass(sample);
    return j;
}

void write_trajectory_bin(const std::filesystem::path& path, const TrajectoryEnsemble& traj) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot open for writing: " + path.string());
    const std::uint32_t d = static_cast<std::uint32_t>(traj.dim);
    const std::uint64_t n = traj.count();
    const std::uint64_t steps = traj.steps();
    write_raw(os, &d, sizeof d);
    write_raw(os, &n, sizeof n);
    write_raw(os, &steps, sizeof steps);
    write_raw(os, &traj.dt, sizeof traj.dt);
    write_raw(os, &traj.seed, sizeof traj.seed);
    for (const auto& frame : traj.frames)
        for (const Vec& x : frame) write_raw(os, x.data(), sizeof(double) * traj.dim);
}

TrajectoryEnsemble read_trajectory_bin(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open for reading: " + path.string());
    TrajectoryEnsemble traj;
    traj.dim = static_cast<int>(read_raw<std::uint32_t>(is));
    const std::uint64_t n = read_raw<std::uint64_t>(is);
    const std::uint64_t steps = read_raw<std::uint64_t>(is);
    traj.dt = read_raw<double>(is);
    traj.seed = read_raw<std::uint64_t>(is);
    traj.times.resize(steps + 1);
    traj.frames.assign(steps + 1, std::vector<Vec>(n, zero_vec()));
    for (std::uint64_t k = 0; k <= steps; ++k) {
        traj.times[k] = k * traj.dt;
        for (std::uint64_t i = 0; i < n; ++i) {
            Vec x = zero_vec();
            is.read(reinterpret_cast<char*>(x.data()),
                    static_cast<std::streamsize>(sizeof(double) * traj.dim));
            if (!is) throw NumericalError("trajectory read: truncated file");
            traj.frames[k][i] = x;
        }
    }
    return traj;
}

std::string trajectory_csv(const TrajectoryEnsemble& traj) {
    std::string out = "step,time,particle";
    for (int k = 0; k < traj.dim; ++k) out += ",x" + std::to_string(k);
    out += '\n';
    char buf[64];
    for (std::size_t k = 0; k < traj.times.size(); ++k)
        for (std::size_t i = 0; i < traj.count(); ++i) {
            out += std::to_string(k);
            out += ',';
            out += fmt(buf, sizeof buf, traj.times[k]);
            out += ',';
            out += std::to_string(i);
            for (int c = 0; c < traj.dim; ++c) {
                out += ',';
                out += fmt(buf, sizeof buf, traj.frames[k][i][c]);
            }
            out += '\n';
        }
    return out;
}

void write_fields_bin(const std::filesystem::path& path, const std::vector<GridField>& frames) {
    if (frames.empty()) throw StructureError("write_fields_bin: empty frame list");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot open for writing: " + path.string());
    const GridSpec& g = frames.front().spec;
    const std::uint32_t d = static_cast<std::uint32_t>(g.dim);
    const std::uint32_t comps = static_cast<std::uint32_t>(frames.front().comps);
    const std::uint64_t count = frames.size();
    write_raw(os, &d, sizeof d);
    write_raw(os, &comps, sizeof comps);
    write_raw(os, &count, sizeof count);
    for (int k = 0; k < g.dim; ++k) {
        const std::uint64_t cells = static_cast<std::uint64_t>(g.cells[k]);
        write_raw(os, &cells, sizeof cells);
        write_raw(os, &g.lo[k], sizeof(double));
        write_raw(os, &g.hi[k], sizeof(double));
    }
    for (const GridField& f : frames) {
        if (!(f.spec == g) || f.comps != frames.front().comps)
            throw StructureError("write_fields_bin: inhomogeneous frames");
        write_raw(os, &f.time, sizeof(double));
        write_raw(os, f.data.data(), sizeof(double) * f.data.size());
    }
}

std::string field_csv(const GridField& field) {
    const GridSpec& g = field.spec;
    std::string out = "# order: x-fastest\n";
    for (int k = 0; k < g.dim; ++k) out += "i" + std::to_string(k) + ",";
    for (int k = 0; k < g.dim; ++k) out += "x" + std::to_string(k) + ",";
    for (int c = 0; c < field.comps; ++c) {
        out += "v" + std::to_string(c);
        out += c + 1 < field.comps ? ',' : '\n';
    }
    char buf[64];
    const int n0 = g.count(0), n1 = g.count(1), n2 = g.count(2);
    for (int i2 = 0; i2 < n2; ++i2)
        for (int i1 = 0; i1 < n1; ++i1)
            for (int i0 = 0; i0 < n0; ++i0) {
                const int idx[3] = {i0, i1, i2};
                const Vec c = g.center(i0, i1, i2);
                for (int k = 0; k < g.dim; ++k) {
                    out += std::to_string(idx[k]);
                    out += ',';
                }
                for (int k = 0; k < g.dim; ++k) {
                    out += fmt(buf, sizeof buf, c[k]);
                    out += ',';
                }
                const std::size_t cell = g.flat(i0, i1, i2);
                for (int comp = 0; comp < field.comps; ++comp) {
                    out += fmt(buf, sizeof buf, field.at(cell, comp));
                    out += comp + 1 < field.comps ? ',' : '\n';
                }
            }
    return out;
}

std::string mass_ledger_csv(const PdeSolution& sol) {
    std::string out = "frame,time,mass\n";
    char buf[64];
    for (std::size_t k = 0; k < sol.times.size(); ++k) {
        out += std::to_string(k);
        out += ',';
        out += fmt(buf, sizeof buf, sol.times[k]);
        out += ',';
        out += fmt(buf, sizeof buf, sol.mass[k]);
        out += '\n';
    }
    return out;
}

ordered_json experiment_config_json(const ExperimentConfig& cfg) {
    ordered_json j;
    j["dim"] = cfg.dim;
    j["density"]["id"] = cfg.density_id;
    j["density"]["lo"] = std::vector<double>(cfg.support.lo.begin(),
                                             cfg.support.lo.begin() + cfg.dim);
    j["density"]["hi"] = std::vector<double>(cfg.support.hi.begin(),
                                             cfg.support.hi.begin() + cfg.dim);
    j["kernel"]["id"] = cfg.kernel_id;
    j["kernel"]["kappa"] = cfg.kappa;
    j["h_list"] = cfg.h_list;
    j["realizations"] = cfg.realizations;
    j["horizon"] = cfg.horizon;
    j["q0"] = cfg.q0;
    j["prob_constant"] = cfg.prob_constant;
    j["sigma"] = cfg.sigma;
    j["seed"] = cfg.base_seed;
    j["uniform_weights"] = cfg.uniform_weights;
    j["policy"]["sde_steps"] = cfg.sde_steps;
    j["policy"]["dx_over_eps"] = cfg.dx_over_eps;
    j["policy"]["pad_sigmas"] = cfg.pad_sigmas;
    j["policy"]["output_frames"] = cfg.output_frames;
    if (cfg.separation_j) j["separation_j"] = *cfg.separation_j;
    j["separation_all_j"] = cfg.separation_all_j;
    return j;
}

namespace {

ordered_json base_report_json(const ExperimentConfig& cfg) {
    ordered_json j;
    j["tool"] = "mflab";
    ordered_json cfg_json = experiment_config_json(cfg);
    j["config"] = cfg_json;
    j["config_hash"] = sha256_hex(cfg_json.dump());
    return j;
}

}  // namespace

ordered_json convergence_report_json(const ConvergenceReport& report) {
    ordered_json j = base_report_json(report.config);
    j["kind"] = "convergence";
    j["rate_exponent"] = report.rate_exponent;
    j["sde"]["steps"] = report.sde_steps;
    j["sde"]["dt"] = report.sde_dt;
    j["grid_cells"] =
        std::vector<int>(report.grid_cells.begin(), report.grid_cells.begin() + report.config.dim);
    j["out_of_grid_queries"] = report.out_of_grid_queries;
    j["slope"]["value"] = report.slope.slope;
    j["slope"]["ci90_lo"] = report.slope.ci_lo;
    j["slope"]["ci90_hi"] = report.slope.ci_hi;
    j["levels"] = ordered_json::array();
    for (const ConvergenceLevel& level : report.levels) {
        ordered_json l;
        l["h"] = level.h;
        l["eps"] = level.eps;
        if (level.delta > 0.0) l["delta"] = level.delta;
        l["particles"] = level.particles;
        l["median"] = level.median;
        l["quartile_lo"] = level.quartile_lo;
        l["quartile_hi"] = level.quartile_hi;
        l["median_self"] = level.median_self;
        l["coupling_median"] = level.coupling_median;
        l["probability"] = level.empirical_probability;
        l["probability_ci"] = {level.probability_ci.lo, level.probability_ci.hi};
        l["fitted_c"] = level.fitted_c;
        l["pathwise_bound_ok"] = level.pathwise_bound_ok;
        l["pathwise_bound_max_ratio"] = level.pathwise_bound_max_ratio;
        l["initial_error"] = level.initial_error;
        l["initial_error_bound"] = level.initial_error_bound;
        l["truncation_constant"] = level.truncation_constant;
        l["headline"] = level.headline;
        l["headline_self"] = level.headline_self;
        l["coupling"] = level.coupling;
        j["levels"].push_back(std::move(l));
    }
    return j;
}

std::string convergence_report_csv(const ConvergenceReport& report) {
    std::string out =
        "h,eps,delta,particles,median,quartile_lo,quartile_hi,median_self,coupling_median,"
        "probability,probability_lo,probability_hi,fitted_c,pathwise_bound_ok,"
        "pathwise_bound_max_ratio,initial_error,initial_error_bound,truncation_constant\n";
    char buf[64];
    for (const ConvergenceLevel& l : report.levels) {
        const double cols[] = {l.h,
                               l.eps,
                               l.delta,
                               static_cast<double>(l.particles),
                               l.median,
                               l.quartile_lo,
                               l.quartile_hi,
                               l.median_self,
                               l.coupling_median,
                               l.empirical_probability,
                               l.probability_ci.lo,
                               l.probability_ci.hi,
                               l.fitted_c,
                               l.pathwise_bound_ok ? 1.0 : 0.0,
                               l.pathwise_bound_max_ratio,
                               l.initial_error,
                               l.initial_error_bound,
                               l.truncation_constant};
        for (std::size_t i = 0; i < std::size(cols); ++i) {
            out += fmt(buf, sizeof buf, cols[i]);
            out += i + 1 < std::size(cols) ? ',' : '\n';
        }
    }
    return out;
}

ordered_json separation_report_json(const SeparationReport& report) {
    ordered_json j = base_report_json(report.config);
    j["kind"] = "separation";
    j["sde"]["steps"] = report.sde_steps;
    j["sde"]["dt"] = report.sde_dt;
    j["levels"] = ordered_json::array();
    for (const SeparationLevel& level : report.levels) {
        ordered_json l;
        l["h"] = level.h;
        l["eps"] = level.eps;
        l["particles"] = level.particles;
        l["j"] = level.j;
        l["e_hat"] = level.e_hat;
        l["std_error"] = level.std_error;
        l["eps_power"] = level.eps_power;
        l["inv_n_eps"] = level.inv_n_eps;
        if (level.all_j_average) l["all_j_average"] = *level.all_j_average;
        l["per_realization"] = level.per_realization;
        j["levels"].push_back(std::move(l));
    }
    return j;
}

std::string separation_report_csv(const SeparationReport& report) {
    std::string out = "h,eps,particles,j,e_hat,std_error,eps_power,inv_n_eps,all_j_average\n";
    char buf[64];
    for (const SeparationLevel& l : report.levels) {
        const double cols[] = {l.h,
                               l.eps,
                               static_cast<double>(l.particles),
                               static_cast<double>(l.j),
                               l.e_hat,
                               l.std_error,
                               l.eps_power,
                               l.inv_n_eps};
        for (double col : cols) {
            out += fmt(buf, sizeof buf, col);
            out += ',';
        }
        if (l.all_j_average) out += fmt(buf, sizeof buf, *l.all_j_average);
        out += '\n';
    }
    return out;
}

}  // namespace mflab
