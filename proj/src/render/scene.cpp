#include "nbrdf/render/scene.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace nbrdf {

int Scene::find_material(const std::string &name) const {
    for (size_t i = 0; i < materials.size(); ++i)
        if (materials[i].name == name)
            return static_cast<int>(i);
    return -1;
}

namespace {

using KvMap = std::map<std::string, std::string>;

Vec3 parse_vec3(const std::string &s) {
    Vec3 v;
    char c1 = 0, c2 = 0;
    std::istringstream is(s);
    if (is >> v.x) {
        if (is >> c1 >> v.y >> c2 >> v.z && c1 == ',' && c2 == ',')
            return v;
        return {v.x, v.x, v.x};
    }
    throw FormatError("bad vector value: " + s);
}

double parse_num(const std::string &s) {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size())
        throw FormatError("bad numeric value: " + s);
    return v;
}

std::string req(const KvMap &kv, const std::string &key, const std::string &entity) {
    auto it = kv.find(key);
    if (it == kv.end())
        throw FormatError(entity + " is missing required key '" + key + "'");
    return it->second;
}

std::string opt(const KvMap &kv, const std::string &key, const std::string &def) {
    auto it = kv.find(key);
    return it == kv.end() ? def : it->second;
}

std::string join_path(const std::string &base, const std::string &rel) {
    if (rel.empty() || rel[0] == '/' || base.empty())
        return rel;
    return base + "/" + rel;
}

Mesh load_obj(const std::string &path, double scale, const Vec3 &translate) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open mesh file: " + path);
    std::vector<Vec3> verts;
    Mesh mesh;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream is(line);
        std::string tag;
        if (!(is >> tag))
            continue;
        if (tag == "v") {
            Vec3 p;
            is >> p.x >> p.y >> p.z;
            verts.push_back(p * scale + translate);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            while (is >> tok) {
                // "i", "i/t", "i//n", "i/t/n" all start with the vertex index
                int i = std::stoi(tok.substr(0, tok.find('/')));
                if (i < 0)
                    i = static_cast<int>(verts.size()) + i + 1;
                idx.push_back(i - 1);
            }
            for (size_t k = 2; k < idx.size(); ++k)
                mesh.tris.push_back({verts.at(idx[0]), verts.at(idx[k - 1]), verts.at(idx[k])});
        }
    }
    return mesh;
}

Material parse_material(const KvMap &kv, const std::string &base_dir,
                        std::map<std::string, std::shared_ptr<const Decoder>> &decoder_cache) {
    Material m;
    m.name = req(kv, "name", "material");
    std::string type = req(kv, "type", "material " + m.name);
    if (type == "lambert") {
        m.kind = MaterialKind::Lambertian;
        m.albedo = parse_vec3(opt(kv, "albedo", "0.5"));
    } else if (type == "conductor") {
        m.kind = MaterialKind::Conductor;
        m.conductor.alpha = parse_num(opt(kv, "alpha", "0.3"));
        m.albedo = parse_vec3(opt(kv, "r0", "0.9"));
    } else if (type == "dielectric") {
        m.kind = MaterialKind::Dielectric;
        m.dielectric.alpha = parse_num(opt(kv, "alpha", "0.3"));
        m.dielectric.eta = parse_num(opt(kv, "eta", "1.5"));
        m.albedo = {1, 1, 1};
    } else if (type == "oracle") {
        m.kind = MaterialKind::Oracle;
        Vec3 a = parse_vec3(opt(kv, "albedo", "0.9"));
        double chans[3] = {a.x, a.y, a.z};
        for (int c = 0; c < 3; ++c) {
            LayerStack s;
            s.top.alpha = parse_num(opt(kv, "alpha1", "0.3"));
            s.top.eta = parse_num(opt(kv, "eta", "1.5"));
            s.medium.albedo = chans[c];
            s.medium.sigma_t = parse_num(opt(kv, "sigma_t", "1"));
            s.bottom_conductor.alpha = parse_num(opt(kv, "alpha2", "0.3"));
            s.bottom_conductor.r0 = parse_num(opt(kv, "r0", "0.9"));
            m.stacks.push_back(s);
        }
        m.oracle_paths = static_cast<long>(parse_num(opt(kv, "paths", "32")));
    } else if (type == "neural" || type == "texture") {
        m.kind = type == "neural" ? MaterialKind::Neural : MaterialKind::Texture;
        std::string dec_path = join_path(base_dir, req(kv, "decoder", "material " + m.name));
        auto &cached = decoder_cache[dec_path];
        if (!cached) {
            auto d = std::make_shared<Decoder>();
            d->graph = build_decoder();
            d->weights = nn::load_weights(dec_path, d->graph);
            cached = d;
        }
        m.decoder = cached;
        if (m.kind == MaterialKind::Neural) {
            auto latents = load_latents(join_path(base_dir, req(kv, "latents", "material")));
            if (latents.empty())
                throw FormatError("empty latent file for material " + m.name);
            m.latent = latents[0];
        } else {
            auto tex = std::make_shared<LatentTexture>(
                load_texture(join_path(base_dir, req(kv, "texture", "material"))));
            if (tex->n_levels() < 2)
                build_mipmap(tex.get());
            m.texture = tex;
            m.uv_scale = parse_num(opt(kv, "uv_scale", "1"));
        }
        auto sit = kv.find("sampler");
        if (sit != kv.end()) {
            SamplerNet net;
            net.graph = build_sampler_net();
            net.weights = nn::load_weights(join_path(base_dir, sit->second), net.graph);
            const LatentBrdf &rep = m.kind == MaterialKind::Neural ? m.latent
                                                                   : m.texture->levels.back()[0];
            double sig = 0, w = 0;
            for (int c = 0; c < rep.channels; ++c) {
                ProxyParams p = fit_params(net, rep.channel(c));
                sig += p.sigma;
                w += p.w;
            }
            m.proxy = {sig / rep.channels, w / rep.channels};
            m.has_proxy = true;
        }
    } else {
        throw FormatError("unknown material type: " + type);
    }
    auto nit = kv.find("normal_map");
    if (nit != kv.end())
        m.normal_map = std::make_shared<ImageBuffer>(read_pfm(join_path(base_dir, nit->second)));
    return m;
}

} // namespace

Scene parse_scene_text(const std::string &text, const std::string &base_dir) {
    Scene scene;
    std::map<std::string, std::shared_ptr<const Decoder>> decoder_cache;
    // Object material references resolve after all lines are read.
    std::vector<std::pair<int, std::string>> sphere_mats, plane_mats, mesh_mats;

    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos)
            line.resize(hash);
        std::istringstream is(line);
        std::string keyword;
        if (!(is >> keyword))
            continue;
        KvMap kv;
        std::string tok;
        while (is >> tok) {
            auto eq = tok.find('=');
            if (eq == std::string::npos)
                throw FormatError("scene line " + std::to_string(line_no) +
                                  ": expected key=value, got '" + tok + "'");
            kv[tok.substr(0, eq)] = tok.substr(eq + 1);
        }
        if (keyword == "camera") {
            scene.camera.pos = parse_vec3(opt(kv, "pos", "0,1,4"));
            scene.camera.look = parse_vec3(opt(kv, "look", "0,0,0"));
            scene.camera.up = parse_vec3(opt(kv, "up", "0,1,0"));
            scene.camera.fov = parse_num(opt(kv, "fov", "40"));
            scene.camera.width = static_cast<int>(parse_num(opt(kv, "width", "128")));
            scene.camera.height = static_cast<int>(parse_num(opt(kv, "height", "128")));
        } else if (keyword == "material") {
            scene.materials.push_back(parse_material(kv, base_dir, decoder_cache));
        } else if (keyword == "sphere") {
            Sphere s;
            s.center = parse_vec3(req(kv, "center", "sphere"));
            s.radius = parse_num(req(kv, "radius", "sphere"));
            sphere_mats.emplace_back(static_cast<int>(scene.spheres.size()),
                                     req(kv, "material", "sphere"));
            scene.spheres.push_back(s);
        } else if (keyword == "plane") {
            Plane p;
            p.point = parse_vec3(req(kv, "point", "plane"));
            p.normal = normalize(parse_vec3(req(kv, "normal", "plane")));
            plane_mats.emplace_back(static_cast<int>(scene.planes.size()),
                                    req(kv, "material", "plane"));
            scene.planes.push_back(p);
        } else if (keyword == "mesh") {
            Mesh m = load_obj(join_path(base_dir, req(kv, "file", "mesh")),
                              parse_num(opt(kv, "scale", "1")),
                              parse_vec3(opt(kv, "translate", "0,0,0")));
            mesh_mats.emplace_back(static_cast<int>(scene.meshes.size()),
                                   req(kv, "material", "mesh"));
            scene.meshes.push_back(std::move(m));
        } else if (keyword == "point_light") {
            scene.point_lights.push_back(
                {parse_vec3(req(kv, "pos", "point_light")),
                 parse_vec3(req(kv, "intensity", "point_light"))});
        } else if (keyword == "area_light") {
            scene.area_lights.push_back(
                {parse_vec3(req(kv, "corner", "area_light")), parse_vec3(req(kv, "e1", "area_light")),
                 parse_vec3(req(kv, "e2", "area_light")),
                 parse_vec3(req(kv, "radiance", "area_light"))});
        } else if (keyword == "env_light") {
            scene.env = EnvLight{parse_vec3(req(kv, "radiance", "env_light"))};
        } else {
            throw FormatError("scene line " + std::to_string(line_no) + ": unknown entity '" +
                              keyword + "'");
        }
    }

    auto resolve = [&scene](const std::string &name) {
        int idx = scene.find_material(name);
        if (idx < 0)
            throw UnresolvedMaterial("no material named '" + name + "'");
        return idx;
    };
    for (auto &[i, name] : sphere_mats)
        scene.spheres[i].material = resolve(name);
    for (auto &[i, name] : plane_mats)
        scene.planes[i].material = resolve(name);
    for (auto &[i, name] : mesh_mats)
        scene.meshes[i].material = resolve(name);
    return scene;
}

Scene parse_scene(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open scene file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    auto slash = path.find_last_of('/');
    std::string base_dir = slash == std::string::npos ? "." : path.substr(0, slash);
    return parse_scene_text(ss.str(), base_dir);
}

namespace {

constexpr double kRayEps = 1e-4;

bool hit_sphere(const Sphere &s, const Ray &r, double *t) {
    Vec3 oc = r.o - s.center;
    double b = dot(oc, r.d);
    double c = oc.length_squared() - s.radius * s.radius;
    double disc = b * b - c;
    if (disc < 0)
        return false;
    double sq = std::sqrt(disc);
    double t0 = -b - sq, t1 = -b + sq;
    if (t0 > kRayEps)
        *t = t0;
    else if (t1 > kRayEps)
        *t = t1;
    else
        return false;
    return true;
}

bool hit_plane(const Plane &p, const Ray &r, double *t) {
    double denom = dot(r.d, p.normal);
    if (std::abs(denom) < 1e-12)
        return false;
    double tt = dot(p.point - r.o, p.normal) / denom;
    if (tt <= kRayEps)
        return false;
    *t = tt;
    return true;
}

bool hit_triangle(const Triangle &tri, const Ray &r, double *t) {
    Vec3 e1 = tri.b - tri.a, e2 = tri.c - tri.a;
    Vec3 pv = cross(r.d, e2);
    double det = dot(e1, pv);
    if (std::abs(det) < 1e-12)
        return false;
    double inv = 1.0 / det;
    Vec3 tv = r.o - tri.a;
    double u = dot(tv, pv) * inv;
    if (u < 0 || u > 1)
        return false;
    Vec3 qv = cross(tv, e1);
    double v = dot(r.d, qv) * inv;
    if (v < 0 || u + v > 1)
        return false;
    double tt = dot(e2, qv) * inv;
    if (tt <= kRayEps)
        return false;
    *t = tt;
    return true;
}

bool hit_rect(const AreaLight &l, const Ray &r, double *t) {
    Vec3 n = cross(l.e1, l.e2);
    double denom = dot(r.d, n);
    if (std::abs(denom) < 1e-12)
        return false;
    double tt = dot(l.corner - r.o, n) / denom;
    if (tt <= kRayEps)
        return false;
    Vec3 p = r.o + r.d * tt - l.corner;
    double u = dot(p, l.e1) / l.e1.length_squared();
    double v = dot(p, l.e2) / l.e2.length_squared();
    if (u < 0 || u > 1 || v < 0 || v > 1)
        return false;
    *t = tt;
    return true;
}

} // namespace

Hit intersect(const Scene &scene, const Ray &ray) {
    Hit best;
    best.t = -1;
    auto closer = [&best](double t) { return !best.valid() || t < best.t; };

    for (const auto &s : scene.spheres) {
        double t;
        if (hit_sphere(s, ray, &t) && closer(t)) {
            best.t = t;
            best.pos = ray.o + ray.d * t;
            best.normal = normalize(best.pos - s.center);
            best.material = s.material;
            best.area_light = -1;
            // lat-long parameterization
            Vec3 n = best.normal;
            best.u = 0.5 + std::atan2(n.x, n.z) / kTwoPi;
            best.v = std::acos(std::clamp(n.y, -1.0, 1.0)) / kPi;
        }
    }
    for (const auto &p : scene.planes) {
        double t;
        if (hit_plane(p, ray, &t) && closer(t)) {
            best.t = t;
            best.pos = ray.o + ray.d * t;
            best.normal = p.normal;
            best.material = p.material;
            best.area_light = -1;
            Frame f(p.normal);
            Vec3 local = f.to_local(best.pos - p.point);
            best.u = local.x;
            best.v = local.y;
        }
    }
    for (const auto &m : scene.meshes)
        for (const auto &tri : m.tris) {
            double t;
            if (hit_triangle(tri, ray, &t) && closer(t)) {
                best.t = t;
                best.pos = ray.o + ray.d * t;
                best.normal = normalize(cross(tri.b - tri.a, tri.c - tri.a));
                best.material = m.material;
                best.area_light = -1;
                best.u = best.v = 0;
            }
        }
    for (size_t i = 0; i < scene.area_lights.size(); ++i) {
        double t;
        if (hit_rect(scene.area_lights[i], ray, &t) && closer(t)) {
            best.t = t;
            best.pos = ray.o + ray.d * t;
            best.normal = normalize(cross(scene.area_lights[i].e1, scene.area_lights[i].e2));
            best.material = -1;
            best.area_light = static_cast<int>(i);
        }
    }
    if (best.valid() && dot(best.normal, ray.d) > 0 && best.area_light < 0)
        best.normal = -best.normal;
    return best;
}

bool occluded(const Scene &scene, const Vec3 &from, const Vec3 &to) {
    Vec3 delta = to - from;
    double dist = delta.length();
    Ray ray{from, delta / dist};
    Hit h = intersect(scene, ray);
    return h.valid() && h.t < dist - 1e-3;
}

} // namespace nbrdf
