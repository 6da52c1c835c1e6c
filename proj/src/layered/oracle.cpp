#include "nbrdf/layered/oracle.hpp"

#include <cmath>
#include <limits>

#include "nbrdf/core/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nbrdf {

namespace {

Direction mirror_z(const Direction &v) { return {v.x, v.y, -v.z}; }

// Exit connection through the rough top, importance-sampled once per walk
// from the interface's transmission lobe conditioned on wo. `factor` is an
// unbiased one-sample estimate of f_t(dir_inside -> wo) cos(theta_in) / pdf:
// the outside->inside sample weight already equals f_t(wo -> dir) cos / pdf,
// and reciprocity of the transmission converts it with a 1/eta^2 factor.
struct ExitConnection {
    Direction dir_inside; // unit direction from the vertex up to the top
    double factor = 0;
    bool valid = false;
};

ExitConnection sample_exit(const Direction &wo, const DielectricParams &top, RngStream &rng) {
    ExitConnection c;
    MicrofacetSample s = sample_microfacet(top, wo, rng, top.eta);
    if (s.event != MicrofacetEvent::Transmit || s.weight <= 0 || s.wo.z >= -1e-9)
        return c;
    c.dir_inside = -s.wo;
    c.factor = s.weight / (top.eta * top.eta);
    c.valid = true;
    return c;
}

struct WalkResult {
    double nee = 0;          // estimate of f(wi, wo), cosine excluded
    Direction exit_dir;      // valid when exited
    double exit_throughput = 0;
    bool exited = false;
};

// One random walk through the stack. wi points away from the top interface
// (wi.z > 0). When wo != nullptr, next-event contributions toward it are
// accumulated. depth is shared across nested stacks.
WalkResult layered_walk(const LayerStack &stack, const Direction &wi, const Direction *wo,
                        RngStream &rng, int &depth) {
    WalkResult res;
    if (wo != nullptr)
        res.nee += eval_dielectric_reflect(stack.top, wi, *wo);

    // Top interface, outside.
    MicrofacetSample top = sample_microfacet(stack.top, wi, rng, stack.top.eta);
    if (top.weight <= 0)
        return res;
    if (top.event == MicrofacetEvent::Reflect) {
        if (top.wo.z > 0) {
            res.exited = true;
            res.exit_dir = top.wo;
            res.exit_throughput = top.weight;
        }
        return res;
    }

    ExitConnection exit_conn;
    if (wo != nullptr)
        exit_conn = sample_exit(*wo, stack.top, rng);

    double beta = top.weight;
    Direction d = top.wo; // propagation direction, d.z < 0 heading down
    double z = 0;         // physical depth in [0, 1], 0 = top
    double sigma_t = stack.medium.sigma_t;
    double albedo = stack.medium.albedo;

    while (true) {
        if (++depth >= kMaxWalkDepth)
            return res;
        if (depth > kRouletteDepth) {
            double survive = std::min(1.0, beta);
            if (rng.next_double() >= survive)
                return res;
            beta /= survive;
        }

        double abs_dz = std::abs(d.z);
        if (abs_dz < 1e-12)
            return res; // grazing inside the slab, negligible measure
        double t_boundary = (d.z < 0) ? (1.0 - z) / abs_dz : z / abs_dz;
        double t_scatter = (sigma_t > 0)
                               ? -std::log(1.0 - rng.next_double()) / sigma_t
                               : std::numeric_limits<double>::infinity();

        if (t_scatter < t_boundary) {
            // Medium vertex.
            z -= t_scatter * d.z;
            if (rng.next_double() >= albedo)
                return res; // absorbed
            if (wo != nullptr && exit_conn.valid) {
                double tr = std::exp(-sigma_t * z / exit_conn.dir_inside.z);
                res.nee += beta * (1.0 / (4.0 * kPi)) / exit_conn.dir_inside.z * tr *
                           exit_conn.factor;
            }
            d = uniform_sample_sphere(rng);
            continue;
        }

        if (d.z < 0) {
            // Bottom interface; incident direction away from it.
            z = 1.0;
            Direction w_in = -d;
            if (stack.has_nested_bottom()) {
                const Direction *conn =
                    (wo != nullptr && exit_conn.valid) ? &exit_conn.dir_inside : nullptr;
                WalkResult sub = layered_walk(*stack.bottom_stack, w_in, conn, rng, depth);
                if (conn != nullptr) {
                    double tr = std::exp(-sigma_t / exit_conn.dir_inside.z);
                    res.nee += beta * sub.nee * tr * exit_conn.factor;
                }
                if (!sub.exited || sub.exit_dir.z <= 0)
                    return res;
                beta *= sub.exit_throughput;
                d = sub.exit_dir;
            } else {
                if (wo != nullptr && exit_conn.valid) {
                    double tr = std::exp(-sigma_t / exit_conn.dir_inside.z);
                    res.nee += beta *
                               eval_conductor(stack.bottom_conductor, w_in, exit_conn.dir_inside) *
                               tr * exit_conn.factor;
                }
                MicrofacetSample s = sample_microfacet(stack.bottom_conductor, w_in, rng);
                if (s.weight <= 0 || s.wo.z <= 0)
                    return res;
                beta *= s.weight;
                d = s.wo;
            }
        } else {
            // Top interface from below: mirrored frame so the normal is +z.
            z = 0.0;
            Direction w_in = {-d.x, -d.y, d.z};
            MicrofacetSample s =
                sample_microfacet(stack.top, w_in, rng, 1.0 / stack.top.eta);
            if (s.weight <= 0)
                return res;
            if (s.event == MicrofacetEvent::Transmit) {
                Direction out = mirror_z(s.wo);
                if (out.z <= 0)
                    return res;
                res.exited = true;
                res.exit_dir = out;
                res.exit_throughput = beta * s.weight;
                return res;
            }
            Direction down = mirror_z(s.wo);
            if (down.z >= 0)
                return res;
            beta *= s.weight;
            d = down;
        }
    }
}

} // namespace

OracleEstimate eval_layered(const LayerStack &stack, const Direction &wi, const Direction &wo,
                            long n_paths, RngStream rng) {
    if (wi.z <= 0 || wo.z <= 0)
        throw InvalidDirection("eval_layered requires upper-hemisphere directions");
    double sum = 0, sum2 = 0;
    for (long k = 0; k < n_paths; ++k) {
        int depth = 0;
        double v = layered_walk(stack, wi, &wo, rng, depth).nee;
        sum += v;
        sum2 += v * v;
    }
    OracleEstimate e;
    e.n_paths = n_paths;
    e.value = sum / n_paths;
    double var = std::max(0.0, sum2 / n_paths - e.value * e.value);
    e.stderr_ = std::sqrt(var / n_paths);
    return e;
}

LayeredSample sample_layered(const LayerStack &stack, const Direction &wi, RngStream &rng) {
    int depth = 0;
    WalkResult r = layered_walk(stack, wi, nullptr, rng, depth);
    LayeredSample s;
    if (r.exited) {
        s.wo = r.exit_dir;
        s.throughput = r.exit_throughput;
    }
    return s;
}

std::vector<float> tabulate_layered(const LayerStack &stack, const std::vector<Direction> &grid,
                                    long n_paths_per_pair, uint64_t seed) {
    const long n = static_cast<long>(grid.size());
    std::vector<float> table(static_cast<size_t>(n) * n);
#pragma omp parallel for schedule(dynamic, 8)
    for (long idx = 0; idx < n * n; ++idx) {
        long i = idx / n, o = idx % n;
        RngStream rng(seed, static_cast<uint64_t>(idx));
        table[idx] = static_cast<float>(
            eval_layered(stack, grid[i], grid[o], n_paths_per_pair, rng).value);
    }
    return table;
}

} // namespace nbrdf
