#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nbrdf/layered/oracle.hpp"
#include "nbrdf/neural/sampler.hpp"
#include "nbrdf/render/image.hpp"
#include "nbrdf/texture/latent_texture.hpp"

namespace nbrdf {

struct Ray {
    Vec3 o, d; // d normalized
};

struct Camera {
    Vec3 pos{0, 1, 4}, look{0, 0, 0}, up{0, 1, 0};
    double fov = 40; // vertical, degrees
    int width = 128, height = 128;
};

enum class MaterialKind { Lambertian, Conductor, Dielectric, Oracle, Neural, Texture };

struct Material {
    std::string name;
    MaterialKind kind = MaterialKind::Lambertian;

    Vec3 albedo{0.5, 0.5, 0.5}; // Lambertian reflectance / conductor r0 tint
    ConductorParams conductor;
    DielectricParams dielectric;

    // Oracle: one stack per channel (albedo may differ per channel).
    std::vector<LayerStack> stacks;
    long oracle_paths = 32;

    // Neural: shared decoder, per-material latent, cached proxy params.
    std::shared_ptr<const Decoder> decoder;
    LatentBrdf latent;
    ProxyParams proxy;
    bool has_proxy = false;

    std::shared_ptr<const LatentTexture> texture;
    double uv_scale = 1.0;

    std::shared_ptr<const ImageBuffer> normal_map; // tangent-space, optional
};

struct Sphere {
    Vec3 center;
    double radius = 1;
    int material = -1;
};

// Infinite plane; uv from in-plane coordinates times uv_scale.
struct Plane {
    Vec3 point, normal{0, 0, 1};
    int material = -1;
};

struct Triangle {
    Vec3 a, b, c;
};

struct Mesh {
    std::vector<Triangle> tris;
    int material = -1;
};

struct PointLight {
    Vec3 pos, intensity; // radiant intensity per channel
};

// One-sided emitting rectangle, also visible to BRDF-sampled rays.
struct AreaLight {
    Vec3 corner, e1, e2, radiance;
};

struct EnvLight {
    Vec3 radiance; // constant over the sphere
};

struct Scene {
    Camera camera;
    std::vector<Material> materials;
    std::vector<Sphere> spheres;
    std::vector<Plane> planes;
    std::vector<Mesh> meshes;
    std::vector<PointLight> point_lights;
    std::vector<AreaLight> area_lights;
    std::optional<EnvLight> env;

    int find_material(const std::string &name) const;
};

// Line-oriented scene text:
//   camera pos=0,1,4 look=0,0,0 up=0,1,0 fov=40 width=128 height=128
//   material name=m type=lambert albedo=0.5,0.5,0.5
//   material name=c type=conductor alpha=0.3 r0=0.9,0.7,0.4
//   material name=d type=dielectric alpha=0.2 eta=1.5
//   material name=o type=oracle alpha1=0.2 eta=1.5 albedo=0.9,0.6,0.3
//            sigma_t=2 alpha2=0.4 r0=0.9 paths=32
//   material name=n type=neural decoder=dec.nbwt latents=x.nblv sampler=s.nbwt
//   material name=t type=texture decoder=dec.nbwt texture=x.nblt uv_scale=4
//   (any material may add normal_map=n.pfm)
//   sphere center=0,0,0 radius=1 material=m
//   plane point=0,-1,0 normal=0,1,0 material=m
//   mesh file=bunny.obj material=m scale=1 translate=0,0,0
//   point_light pos=3,3,3 intensity=50,50,50
//   area_light corner=-1,3,-1 e1=2,0,0 e2=0,0,2 radiance=5,5,5
//   env_light radiance=1,1,1
// '#' starts a comment. Referenced files resolve relative to the scene file.
Scene parse_scene(const std::string &path);
Scene parse_scene_text(const std::string &text, const std::string &base_dir);

struct Hit {
    double t = -1;
    Vec3 pos, normal; // geometric normal, facing the incoming ray
    double u = 0, v = 0;
    int material = -1;
    int area_light = -1; // >= 0 when an emitter was hit
    bool valid() const { return t > 0; }
};

Hit intersect(const Scene &scene, const Ray &ray);
bool occluded(const Scene &scene, const Vec3 &from, const Vec3 &to);

} // namespace nbrdf
