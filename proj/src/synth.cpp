#include "sbir/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <unordered_map>

namespace sbir {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
}

double gaussian(std::mt19937_64& rng) {
    const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

struct Point {
    double x, y;
};

/// Instance geometry in unit-square coordinates; the marker dot sits at a
/// fixed rightward offset so every shape is horizontally asymmetric.
struct ShapeGeometry {
    std::vector<Point> verts;
    Point marker_center;
    double marker_radius;
    // Per-instance appearance; shared by a mirror sibling, so orientation
    // stays the only cue separating the pair.
    double fill_intensity;
    double stroke_intensity;
};

ShapeGeometry make_geometry(int category, std::mt19937_64& rng) {
    const int nv = 3 + category % 6;
    const double rot = category * 0.61803 + uniform(rng, -0.18, 0.18);
    const double scale = uniform(rng, 0.2, 0.4);
    const double shade = uniform(rng, 0.0, 1.0);
    const double marker = uniform(rng, 0.16, 0.4);
    const double cx = 0.5 + uniform(rng, -0.05, 0.05);
    const double cy = 0.5 + uniform(rng, -0.05, 0.05);
    ShapeGeometry g;
    g.verts.reserve(static_cast<size_t>(nv));
    for (int k = 0; k < nv; ++k) {
        const double ang = rot + 2.0 * M_PI * k / nv;
        const double r = scale * uniform(rng, 0.72, 1.0);
        g.verts.push_back({cx + r * std::cos(ang), cy + r * std::sin(ang)});
    }
    g.marker_center = {cx + 0.55 * scale, cy};
    g.marker_radius = marker * scale;
    g.fill_intensity = 0.35 + 0.55 * shade;
    g.stroke_intensity = 0.5 + 0.45 * shade;
    return g;
}

bool inside_polygon(const std::vector<Point>& verts, double px, double py) {
    bool inside = false;
    const size_t n = verts.size();
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point& a = verts[i];
        const Point& b = verts[j];
        if ((a.y > py) != (b.y > py) &&
            px < (b.x - a.x) * (py - a.y) / (b.y - a.y) + a.x)
            inside = !inside;
    }
    return inside;
}

double dist_to_segment(double px, double py, const Point& a, const Point& b) {
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0.0 ? ((px - a.x) * vx + (py - a.y) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = px - (a.x + t * vx), dy = py - (a.y + t * vy);
    return std::sqrt(dx * dx + dy * dy);
}

Raster render_photo(const ShapeGeometry& g, int h, int w) {
    constexpr int kSuper = 3;  // 3x3 supersampling
    constexpr double kBackground = 0.12;
    const double kShape = g.fill_intensity;
    constexpr double kMarker = 0.40;
    Raster out = Raster::filled(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int sy = 0; sy < kSuper; ++sy)
                for (int sx = 0; sx < kSuper; ++sx) {
                    const double py = (y + (sy + 0.5) / kSuper) / h;
                    const double px = (x + (sx + 0.5) / kSuper) / w;
                    const double mdx = px - g.marker_center.x;
                    const double mdy = py - g.marker_center.y;
                    if (mdx * mdx + mdy * mdy < g.marker_radius * g.marker_radius)
                        acc += kMarker;
                    else if (inside_polygon(g.verts, px, py))
                        acc += kShape;
                    else
                        acc += kBackground;
                }
            out.at(y, x) = acc / (kSuper * kSuper);
        }
    return out;
}

Raster render_sketch(const ShapeGeometry& g, int h, int w, double jitter,
                     std::mt19937_64& rng) {
    const double thickness = 1.4 / std::min(h, w);
    std::vector<Point> verts = g.verts;
    for (Point& v : verts) {
        v.x += uniform(rng, -jitter, jitter);
        v.y += uniform(rng, -jitter, jitter);
    }
    const Point mc = {g.marker_center.x + uniform(rng, -jitter, jitter),
                      g.marker_center.y + uniform(rng, -jitter, jitter)};
    Raster out = Raster::filled(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double py = (y + 0.5) / h;
            const double px = (x + 0.5) / w;
            double d = 1e9;
            for (size_t i = 0, j = verts.size() - 1; i < verts.size(); j = i++)
                d = std::min(d, dist_to_segment(px, py, verts[i], verts[j]));
            const double mdx = px - mc.x, mdy = py - mc.y;
            d = std::min(d, std::abs(std::sqrt(mdx * mdx + mdy * mdy) - g.marker_radius));
            const double cover = std::clamp((thickness - d) / (0.5 * thickness), 0.0, 1.0);
            out.at(y, x) = g.stroke_intensity * cover;
        }
    return out;
}

void add_noise(Raster& r, double sigma, std::mt19937_64& rng) {
    if (sigma <= 0.0) return;
    for (double& p : r.pixels) p = std::clamp(p + sigma * gaussian(rng), 0.0, 1.0);
}

}  // namespace

void SynthSpec::validate() const {
    if (num_categories <= 0 || instances_per_category <= 0 ||
        sketches_per_instance <= 0 || image_h <= 0 || image_w <= 0)
        throw std::invalid_argument("SynthSpec: all counts must be positive");
    if (mirror_fraction < 0.0 || mirror_fraction > 1.0)
        throw std::invalid_argument("SynthSpec: mirror_fraction must be in [0,1]");
    if (stroke_jitter < 0.0 || background_noise < 0.0)
        throw std::invalid_argument("SynthSpec: negative noise level");
    if (image_h < 8 || image_w < 8)
        throw std::invalid_argument("SynthSpec: image too small for stroke rendering");
}

DatasetIndex generate_dataset(const SynthSpec& spec) {
    spec.validate();
    DatasetIndex ds;
    ds.num_categories = spec.num_categories;
    ds.split_tag = "full";
    std::uint64_t next_id = 1;

    const int pairs =
        static_cast<int>(spec.instances_per_category * spec.mirror_fraction) / 2;
    const int singles = spec.instances_per_category - 2 * pairs;

    for (int cat = 0; cat < spec.num_categories; ++cat) {
        for (int slot = 0; slot < singles + pairs; ++slot) {
            std::mt19937_64 rng(splitmix64(spec.seed ^ splitmix64(
                (static_cast<std::uint64_t>(cat) << 20) + static_cast<std::uint64_t>(slot))));
            const ShapeGeometry geom = make_geometry(cat, rng);

            SampleRecord rec;
            rec.instance_id = next_id++;
            rec.category_id = cat;
            rec.noiseless_photo = render_photo(geom, spec.image_h, spec.image_w);
            rec.photo = *rec.noiseless_photo;
            add_noise(rec.photo, spec.background_noise, rng);
            for (int k = 0; k < spec.sketches_per_instance; ++k)
                rec.sketches.push_back(render_sketch(geom, spec.image_h, spec.image_w,
                                                     spec.stroke_jitter, rng));

            const bool mirrored = slot >= singles;
            if (mirrored) {
                SampleRecord sib;
                sib.instance_id = next_id++;
                sib.category_id = cat;
                sib.noiseless_photo = rec.noiseless_photo->mirrored();
                sib.photo = *sib.noiseless_photo;
                add_noise(sib.photo, spec.background_noise, rng);
                for (int k = 0; k < spec.sketches_per_instance; ++k)
                    sib.sketches.push_back(
                        render_sketch(geom, spec.image_h, spec.image_w,
                                      spec.stroke_jitter, rng)
                            .mirrored());
                rec.mirror_sibling_id = sib.instance_id;
                sib.mirror_sibling_id = rec.instance_id;
                ds.items.push_back(std::move(rec));
                ds.items.push_back(std::move(sib));
            } else {
                ds.items.push_back(std::move(rec));
            }
        }
    }
    ds.validate();
    return ds;
}

std::pair<DatasetIndex, DatasetIndex> split_dataset(const DatasetIndex& ds,
                                                    double test_fraction,
                                                    std::uint64_t seed) {
    if (test_fraction <= 0.0 || test_fraction >= 1.0)
        throw std::invalid_argument("split_dataset: test_fraction must be in (0,1)");
    DatasetIndex train, test;
    train.num_categories = test.num_categories = ds.num_categories;
    train.split_tag = "train";
    test.split_tag = "test";

    std::mt19937_64 rng(splitmix64(seed ^ 0x5b17ca7a10c3ULL));
    for (int cat = 0; cat < ds.num_categories; ++cat) {
        const std::vector<size_t> members = ds.instances_of_category(cat);
        if (members.size() < 2)
            throw std::invalid_argument("split_dataset: category too small to stratify");
        // Mirror pairs move as one group.
        std::vector<std::vector<size_t>> groups;
        std::unordered_map<std::uint64_t, size_t> pos;
        for (size_t i : members) pos[ds.items[i].instance_id] = i;
        std::vector<bool> used(ds.items.size(), false);
        for (size_t i : members) {
            if (used[i]) continue;
            used[i] = true;
            std::vector<size_t> g{i};
            if (ds.items[i].mirror_sibling_id) {
                const size_t j = pos.at(*ds.items[i].mirror_sibling_id);
                used[j] = true;
                g.push_back(j);
            }
            groups.push_back(std::move(g));
        }
        std::shuffle(groups.begin(), groups.end(), rng);
        size_t want_test = static_cast<size_t>(
            std::llround(test_fraction * static_cast<double>(members.size())));
        want_test = std::max<size_t>(1, want_test);
        std::vector<bool> to_test_group(groups.size(), false);
        size_t remaining = want_test;
        for (size_t gi = 0; gi < groups.size() && remaining > 0; ++gi)
            if (groups[gi].size() <= remaining) {
                to_test_group[gi] = true;
                remaining -= groups[gi].size();
            }
        for (size_t gi = 0; gi < groups.size(); ++gi)
            for (size_t i : groups[gi])
                (to_test_group[gi] ? test : train).items.push_back(ds.items[i]);
    }

    // Keep dataset order stable regardless of shuffle order.
    auto by_id = [](const SampleRecord& a, const SampleRecord& b) {
        return a.instance_id < b.instance_id;
    };
    std::sort(train.items.begin(), train.items.end(), by_id);
    std::sort(test.items.begin(), test.items.end(), by_id);
    train.validate();
    test.validate();
    return {std::move(train), std::move(test)};
}

}  // namespace sbir
