#include "nbrdf/render/pathtracer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nbrdf {

namespace {

Vec3 splat(double v) { return {v, v, v}; }

double luminance(const Vec3 &c) { return (c.x + c.y + c.z) / 3.0; }

double power_heuristic(double pf, double pg) {
    double f2 = pf * pf, g2 = pg * pg;
    return f2 + g2 > 0 ? f2 / (f2 + g2) : 0.0;
}

// Latent for the shading point: per-material constant or a filtered
// texture lookup.
LatentBrdf latent_at(const Material &m, double u, double v, double footprint_texels) {
    if (m.kind == MaterialKind::Neural)
        return m.latent;
    double su = u * m.uv_scale, sv = v * m.uv_scale;
    su -= std::floor(su);
    sv -= std::floor(sv);
    return sample_texture(*m.texture, su, sv, std::max(1e-6, footprint_texels));
}

} // namespace

Vec3 eval_material(const Material &m, const Direction &wi, const Direction &wo, RngStream &rng) {
    if (wi.z <= 0 || wo.z <= 0)
        return {0, 0, 0};
    switch (m.kind) {
    case MaterialKind::Lambertian:
        return m.albedo * kInvPi;
    case MaterialKind::Conductor: {
        double r0[3] = {m.albedo.x, m.albedo.y, m.albedo.z};
        Vec3 out;
        out.x = eval_conductor({m.conductor.alpha, r0[0]}, wi, wo);
        out.y = eval_conductor({m.conductor.alpha, r0[1]}, wi, wo);
        out.z = eval_conductor({m.conductor.alpha, r0[2]}, wi, wo);
        return out;
    }
    case MaterialKind::Dielectric:
        return splat(eval_dielectric_reflect(m.dielectric, wi, wo));
    case MaterialKind::Oracle: {
        Vec3 out;
        out.x = eval_layered(m.stacks[0], wi, wo, m.oracle_paths, RngStream(rng.next_u32(), 1)).value;
        out.y = eval_layered(m.stacks[1], wi, wo, m.oracle_paths, RngStream(rng.next_u32(), 2)).value;
        out.z = eval_layered(m.stacks[2], wi, wo, m.oracle_paths, RngStream(rng.next_u32(), 3)).value;
        return out;
    }
    case MaterialKind::Neural:
    case MaterialKind::Texture: {
        const LatentBrdf &lat = m.kind == MaterialKind::Neural ? m.latent
                                                               : m.texture->levels.back()[0];
        auto v = eval_brdf(*m.decoder, lat, wi, wo);
        if (v.size() == 1)
            return splat(v[0]);
        return {v[0], v[1], v[2]};
    }
    }
    return {0, 0, 0};
}

double pdf_material(const Material &m, const Direction &wi, const Direction &wo) {
    if (wi.z <= 0 || wo.z <= 0)
        return 0;
    switch (m.kind) {
    case MaterialKind::Lambertian:
    case MaterialKind::Oracle:
        return wo.z * kInvPi;
    case MaterialKind::Conductor:
        return pdf_microfacet_reflect(m.conductor.alpha, wi, wo);
    case MaterialKind::Dielectric: {
        Direction h = half_vector(wi, wo);
        double f = fresnel_dielectric(std::abs(dot(wi, h)), m.dielectric.eta);
        return f * pdf_microfacet_reflect(m.dielectric.alpha, wi, wo);
    }
    case MaterialKind::Neural:
    case MaterialKind::Texture:
        if (m.has_proxy)
            return proxy_pdf(m.proxy, wi, wo);
        return wo.z * kInvPi;
    }
    return 0;
}

MaterialSample sample_material(const Material &m, const Direction &wi, RngStream &rng) {
    MaterialSample s;
    switch (m.kind) {
    case MaterialKind::Lambertian:
    case MaterialKind::Oracle: {
        s.wo = cosine_sample_hemisphere(rng);
        s.pdf = s.wo.z * kInvPi;
        s.valid = s.pdf > 0;
        return s;
    }
    case MaterialKind::Conductor: {
        auto ms = sample_microfacet(ConductorParams{m.conductor.alpha, 1.0}, wi, rng);
        s.wo = ms.wo;
        s.pdf = ms.pdf;
        s.valid = ms.pdf > 0 && ms.wo.z > 0;
        return s;
    }
    case MaterialKind::Dielectric: {
        auto ms = sample_microfacet(m.dielectric, wi, rng, m.dielectric.eta);
        if (ms.event == MicrofacetEvent::Transmit) {
            s.valid = false; // opaque treatment: transmitted energy dropped
            return s;
        }
        s.wo = ms.wo;
        s.pdf = ms.pdf;
        s.valid = ms.pdf > 0 && ms.wo.z > 0;
        return s;
    }
    case MaterialKind::Neural:
    case MaterialKind::Texture: {
        if (m.has_proxy) {
            auto ps = sample_proxy(m.proxy, wi, rng);
            s.wo = ps.wo;
            s.pdf = ps.pdf;
        } else {
            s.wo = cosine_sample_hemisphere(rng);
            s.pdf = s.wo.z * kInvPi;
        }
        s.valid = s.pdf > 0 && s.wo.z > 0;
        return s;
    }
    }
    return s;
}

namespace {

struct PathState {
    Ray ray;
    Vec3 beta{1, 1, 1};
    bool active = true;
    double bsdf_pdf = 0; // pdf of the direction that produced `ray`
};

// Deferred neural evaluation; at most one next-event and one continuation
// query per path per depth.
struct Query {
    bool used = false;
    bool continuation = false;
    const Decoder *dec = nullptr;
    LatentBrdf latent;
    Direction wi, wo;
    Vec3 weight; // NEE: full radiance multiplier; continuation: cos/pdf
};

struct LightPick {
    Direction dir;  // world, toward the light
    double dist = 0;
    Vec3 radiance;  // emitted radiance (or intensity/d^2 for delta lights)
    double pdf = 0; // solid-angle pdf including light pick; 0 => delta
    bool valid = false;
};

LightPick pick_light(const Scene &scene, const Vec3 &p, RngStream &rng) {
    int n_area = static_cast<int>(scene.area_lights.size());
    int n_point = static_cast<int>(scene.point_lights.size());
    int n = n_point + n_area + (scene.env ? 1 : 0);
    LightPick out;
    if (n == 0)
        return out;
    int pick = static_cast<int>(rng.next_below(static_cast<uint32_t>(n)));
    double pick_pdf = 1.0 / n;
    if (pick < n_point) {
        const auto &l = scene.point_lights[pick];
        Vec3 delta = l.pos - p;
        out.dist = delta.length();
        out.dir = delta / out.dist;
        out.radiance = l.intensity / (out.dist * out.dist * pick_pdf);
        out.pdf = 0;
        out.valid = true;
        return out;
    }
    if (pick < n_point + n_area) {
        const auto &l = scene.area_lights[pick - n_point];
        Vec3 q = l.corner + l.e1 * rng.next_double() + l.e2 * rng.next_double();
        Vec3 delta = q - p;
        out.dist = delta.length();
        out.dir = delta / out.dist;
        Vec3 nl = normalize(cross(l.e1, l.e2));
        double cos_l = dot(nl, -out.dir);
        if (cos_l <= 1e-9)
            return out;
        double area = cross(l.e1, l.e2).length();
        out.pdf = pick_pdf * out.dist * out.dist / (area * cos_l);
        out.radiance = l.radiance;
        out.valid = true;
        return out;
    }
    out.dir = uniform_sample_sphere(rng);
    out.dist = std::numeric_limits<double>::infinity();
    out.pdf = pick_pdf / (4 * kPi);
    out.radiance = scene.env->radiance;
    out.valid = true;
    return out;
}

// Solid-angle pdf that pick_light would assign to this area-light hit.
double area_light_pdf(const Scene &scene, int idx, const Vec3 &from, const Vec3 &hit_pos,
                      const Direction &dir) {
    int n = static_cast<int>(scene.point_lights.size() + scene.area_lights.size()) +
            (scene.env ? 1 : 0);
    const auto &l = scene.area_lights[idx];
    Vec3 nl = normalize(cross(l.e1, l.e2));
    double cos_l = dot(nl, -dir);
    if (cos_l <= 1e-9)
        return 0;
    double area = cross(l.e1, l.e2).length();
    double d2 = (hit_pos - from).length_squared();
    return (1.0 / n) * d2 / (area * cos_l);
}

double env_light_pdf(const Scene &scene) {
    int n = static_cast<int>(scene.point_lights.size() + scene.area_lights.size()) +
            (scene.env ? 1 : 0);
    return (1.0 / n) / (4 * kPi);
}

// Shading frame at the hit, optionally perturbed by a tangent-space map.
Frame shading_frame(const Material &m, const Hit &hit) {
    Frame f(hit.normal);
    if (m.normal_map) {
        double su = hit.u - std::floor(hit.u), sv = hit.v - std::floor(hit.v);
        int x = std::clamp(static_cast<int>(su * m.normal_map->width), 0,
                           m.normal_map->width - 1);
        int y = std::clamp(static_cast<int>(sv * m.normal_map->height), 0,
                           m.normal_map->height - 1);
        const float *px = m.normal_map->pixel(x, y);
        Vec3 tn = normalize(Vec3{2.0 * px[0] - 1.0, 2.0 * px[1] - 1.0, 2.0 * px[2] - 1.0});
        Vec3 world = normalize(f.to_world(tn));
        if (dot(world, hit.normal) > 1e-3)
            f = Frame(world);
    }
    return f;
}

// Decode all pending queries in path order and apply their contributions.
void flush_queries(std::vector<Query> &nee, std::vector<Query> &cont,
                   std::vector<PathState> &paths, std::vector<Vec3> &acc, RenderStats *stats) {
    struct Row {
        const Query *q;
        int path;
        int channel;
    };
    // Group by decoder so each flush runs whole batches through one net.
    std::vector<std::pair<const Decoder *, std::vector<Row>>> groups;
    auto add = [&groups](std::vector<Query> &qs) {
        for (size_t p = 0; p < qs.size(); ++p) {
            Query &q = qs[p];
            if (!q.used)
                continue;
            std::vector<Row> *rows = nullptr;
            for (auto &g : groups)
                if (g.first == q.dec)
                    rows = &g.second;
            if (!rows) {
                groups.emplace_back(q.dec, std::vector<Row>{});
                rows = &groups.back().second;
            }
            for (int c = 0; c < q.latent.channels; ++c)
                rows->push_back({&q, static_cast<int>(p), c});
        }
    };
    add(nee);
    add(cont);

    constexpr size_t kChunk = 8192;
    for (auto &[dec, rows] : groups) {
        if (stats)
            stats->neural_queries += static_cast<long>(rows.size());
        for (size_t start = 0; start < rows.size(); start += kChunk) {
            size_t end = std::min(rows.size(), start + kChunk);
            std::vector<const float *> lat;
            std::vector<Direction> wi, wo;
            for (size_t r = start; r < end; ++r) {
                lat.push_back(rows[r].q->latent.channel(rows[r].channel));
                wi.push_back(rows[r].q->wi);
                wo.push_back(rows[r].q->wo);
            }
            nn::Tensor out = decode_batch_raw(*dec, lat, wi, wo);
            if (stats)
                ++stats->flushes;
            for (size_t r = start; r < end; ++r) {
                const Row &row = rows[r];
                double f = std::max(0.0, static_cast<double>(out.data[r - start]));
                Vec3 value = row.q->weight * f;
                bool mono = row.q->latent.channels == 1;
                if (row.q->continuation) {
                    Vec3 &beta = paths[row.path].beta;
                    if (mono) {
                        beta = beta * value;
                    } else if (row.channel == 0) {
                        beta.x *= value.x;
                    } else if (row.channel == 1) {
                        beta.y *= value.y;
                    } else {
                        beta.z *= value.z;
                    }
                } else {
                    if (mono)
                        acc[row.path] += value;
                    else if (row.channel == 0)
                        acc[row.path].x += value.x;
                    else if (row.channel == 1)
                        acc[row.path].y += value.y;
                    else
                        acc[row.path].z += value.z;
                }
            }
        }
    }
    for (auto &q : nee)
        q.used = false;
    for (auto &q : cont)
        q.used = false;
}

} // namespace

ImageBuffer render(const Scene &scene, const RenderConfig &cfg, RenderStats *stats) {
    for (const auto &s : scene.spheres)
        if (s.material < 0)
            throw UnresolvedMaterial("sphere without material");
    for (const auto &pl : scene.planes)
        if (pl.material < 0)
            throw UnresolvedMaterial("plane without material");
    for (const auto &me : scene.meshes)
        if (me.material < 0)
            throw UnresolvedMaterial("mesh without material");
    const Camera &cam = scene.camera;
    const int npix = cam.width * cam.height;

    Vec3 fwd = normalize(cam.look - cam.pos);
    Vec3 right = normalize(cross(fwd, cam.up));
    Vec3 cup = cross(right, fwd);
    double tan_half = std::tan(cam.fov * kPi / 360.0);
    double aspect = double(cam.width) / cam.height;
    // Isotropic footprint proxy: world-space pixel extent at unit distance.
    double pixel_extent = 2.0 * tan_half / cam.height;

    std::vector<RngStream> streams;
    streams.reserve(npix);
    for (int p = 0; p < npix; ++p)
        streams.emplace_back(cfg.seed, static_cast<uint64_t>(p));

    ImageBuffer img(cam.width, cam.height);
    std::vector<double> lum_sum(npix, 0.0), lum_sum2(npix, 0.0);

    std::vector<PathState> paths(npix);
    std::vector<Vec3> acc(npix);
    std::vector<Query> nee_q(npix), cont_q(npix);
    double audit_err = 0;

    for (int s = 0; s < cfg.spp; ++s) {
#pragma omp parallel for schedule(static)
        for (int p = 0; p < npix; ++p) {
            int x = p % cam.width, y = p / cam.width;
            double jx = streams[p].next_double(), jy = streams[p].next_double();
            double sx = (2.0 * (x + jx) / cam.width - 1.0) * tan_half * aspect;
            double sy = (1.0 - 2.0 * (y + jy) / cam.height) * tan_half;
            paths[p] = PathState{};
            paths[p].ray = {cam.pos, normalize(fwd + right * sx + cup * sy)};
            acc[p] = {0, 0, 0};
        }

        for (int depth = 0; depth < cfg.max_depth; ++depth) {
            bool any_active = false;
#pragma omp parallel for schedule(dynamic, 64) reduction(||: any_active) reduction(max: audit_err)
            for (int p = 0; p < npix; ++p) {
                PathState &ps = paths[p];
                if (!ps.active)
                    continue;
                Hit hit = intersect(scene, ps.ray);

                if (!hit.valid()) {
                    if (scene.env) {
                        double w = 1;
                        if (depth > 0) {
                            if (cfg.strategy == Strategy::LightOnly)
                                w = 0;
                            else if (cfg.strategy == Strategy::MIS)
                                w = power_heuristic(ps.bsdf_pdf, env_light_pdf(scene));
                        }
                        acc[p] += ps.beta * scene.env->radiance * w;
                    }
                    ps.active = false;
                    continue;
                }
                if (hit.area_light >= 0) {
                    const auto &l = scene.area_lights[hit.area_light];
                    Vec3 nl = normalize(cross(l.e1, l.e2));
                    if (dot(nl, ps.ray.d) < 0) { // facing the emitting side
                        double w = 1;
                        if (depth > 0) {
                            if (cfg.strategy == Strategy::LightOnly)
                                w = 0;
                            else if (cfg.strategy == Strategy::MIS)
                                w = power_heuristic(ps.bsdf_pdf,
                                                    area_light_pdf(scene, hit.area_light,
                                                                   ps.ray.o, hit.pos, ps.ray.d));
                        }
                        acc[p] += ps.beta * l.radiance * w;
                    }
                    ps.active = false;
                    continue;
                }

                const Material &m = scene.materials[hit.material];
                Frame frame = shading_frame(m, hit);
                Direction wi = frame.to_local(-ps.ray.d);
                if (wi.z <= 1e-9) {
                    ps.active = false;
                    continue;
                }
                bool neural = m.kind == MaterialKind::Neural || m.kind == MaterialKind::Texture;
                double footprint_texels = 0;
                if (m.kind == MaterialKind::Texture)
                    footprint_texels = hit.t * pixel_extent * m.uv_scale *
                                       m.texture->width /
                                       std::max(0.1, dot(hit.normal, -ps.ray.d));

                if (cfg.strategy != Strategy::BrdfOnly) {
                    LightPick lp = pick_light(scene, hit.pos, streams[p]);
                    if (lp.valid) {
                        Direction wo = frame.to_local(lp.dir);
                        bool blocked = wo.z <= 1e-9;
                        if (!blocked) {
                            Vec3 target = std::isinf(lp.dist) ? hit.pos + lp.dir * 1e6
                                                              : hit.pos + lp.dir * lp.dist;
                            blocked = occluded(scene, hit.pos + hit.normal * 1e-5, target);
                        }
                        if (!blocked) {
                            double w = 1;
                            if (lp.pdf > 0) {
                                if (cfg.strategy == Strategy::MIS)
                                    w = power_heuristic(lp.pdf, pdf_material(m, wi, wo));
                                w /= lp.pdf;
                            }
                            Vec3 weight = ps.beta * lp.radiance * (wo.z * w);
                            if (neural) {
                                Query &q = nee_q[p];
                                q.used = true;
                                q.continuation = false;
                                q.dec = m.decoder.get();
                                q.latent = latent_at(m, hit.u, hit.v, footprint_texels);
                                q.wi = wi;
                                q.wo = wo;
                                q.weight = weight;
                            } else {
                                acc[p] += weight * eval_material(m, wi, wo, streams[p]);
                            }
                        }
                    }
                }

                if (depth + 1 >= cfg.max_depth) {
                    ps.active = false;
                    continue;
                }
                MaterialSample ms = sample_material(m, wi, streams[p]);
                if (!ms.valid || ms.pdf <= 0 || ms.wo.z <= 0) {
                    ps.active = false;
                    continue;
                }
                if (cfg.audit_pdf && neural && m.has_proxy)
                    audit_err = std::max(audit_err,
                                         std::abs(ms.pdf - proxy_pdf(m.proxy, wi, ms.wo)));
                double cos_over_pdf = ms.wo.z / ms.pdf;
                if (neural) {
                    Query &q = cont_q[p];
                    q.used = true;
                    q.continuation = true;
                    q.dec = m.decoder.get();
                    q.latent = latent_at(m, hit.u, hit.v, footprint_texels);
                    q.wi = wi;
                    q.wo = ms.wo;
                    q.weight = splat(cos_over_pdf);
                } else {
                    ps.beta = ps.beta * eval_material(m, wi, ms.wo, streams[p]) * cos_over_pdf;
                }
                ps.ray = {hit.pos + hit.normal * 1e-5, frame.to_world(ms.wo)};
                ps.bsdf_pdf = ms.pdf;
                if (luminance(ps.beta) <= 0 && !neural) {
                    ps.active = false;
                    continue;
                }
                any_active = true;
            }
            flush_queries(nee_q, cont_q, paths, acc, stats);
            if (!any_active)
                break;
        }

        for (int p = 0; p < npix; ++p) {
            float *px = img.rgb.data() + static_cast<size_t>(p) * 3;
            px[0] += static_cast<float>(acc[p].x);
            px[1] += static_cast<float>(acc[p].y);
            px[2] += static_cast<float>(acc[p].z);
            double l = luminance(acc[p]);
            lum_sum[p] += l;
            lum_sum2[p] += l * l;
        }
    }

    for (auto &v : img.rgb)
        v /= cfg.spp;
    if (stats) {
        double var_sum = 0;
        for (int p = 0; p < npix; ++p) {
            double mean = lum_sum[p] / cfg.spp;
            double var = std::max(0.0, lum_sum2[p] / cfg.spp - mean * mean);
            var_sum += cfg.spp > 1 ? var / (cfg.spp - 1) : var;
        }
        stats->mean_pixel_variance = var_sum / npix;
        stats->max_pdf_audit_error = audit_err;
    }
    return img;
}

ImageBuffer render_lobe(const std::function<Vec3(const Direction &, const Direction &)> &eval,
                        const Direction &wi, int resolution) {
    if (resolution < 32)
        throw ShapeMismatch("render_lobe: resolution must be at least 32");
    ImageBuffer img(resolution, resolution);
#pragma omp parallel for schedule(dynamic, 4)
    for (int y = 0; y < resolution; ++y)
        for (int x = 0; x < resolution; ++x) {
            double hx = 2.0 * (x + 0.5) / resolution - 1.0;
            double hy = 1.0 - 2.0 * (y + 0.5) / resolution;
            double r2 = hx * hx + hy * hy;
            if (r2 >= 1.0)
                continue;
            Direction wo{hx, hy, std::sqrt(1.0 - r2)};
            Vec3 v = eval(wi, wo) * wo.z;
            float *px = img.pixel(x, y);
            px[0] = static_cast<float>(v.x);
            px[1] = static_cast<float>(v.y);
            px[2] = static_cast<float>(v.z);
        }
    return img;
}

} // namespace nbrdf
