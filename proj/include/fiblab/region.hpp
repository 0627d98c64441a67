#pragma once

#include "complex_map.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace fiblab {

struct GeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SelfIntersection : GeometryError {
    using GeometryError::GeometryError;
};

enum class RegionKind { EuclidDisc, PoincareLens, Star, Pullback, RootLift };

inline const char* to_string(RegionKind k)
{
    switch (k) {
    case RegionKind::EuclidDisc: return "euclid-disc";
    case RegionKind::PoincareLens: return "poincare-lens";
    case RegionKind::Star: return "star";
    case RegionKind::Pullback: return "pullback";
    case RegionKind::RootLift: return "root-lift";
    }
    return "?";
}

// Closed counterclockwise boundary in local coordinates (point = origin + scale * b), first
// sample repeated at the end. Real-symmetric regions are built from their upper arc, which
// runs from the rightmost real point to the leftmost one; the lower half is its exact mirror.
struct Region {
    RegionKind kind = RegionKind::EuclidDisc;
    std::vector<Cplx> boundary;
    size_t arc_end = 0; // index of the leftmost real point; 0 if not built from an arc
    Real origin = 0, scale = 1;
    int level = -1;
    std::string label;

    size_t size() const { return boundary.empty() ? 0 : boundary.size() - 1; }
    std::vector<Cplx> upper_arc() const
    {
        if (arc_end == 0)
            throw GeometryError("upper_arc: region not built from a real-symmetric arc");
        return {boundary.begin(), boundary.begin() + static_cast<long>(arc_end) + 1};
    }
    // Absolute coordinates in double; only meaningful for regions of moderate size.
    Cplx absolute(Cplx b) const { return origin.convert_to<double>() + scale.convert_to<double>() * b; }
};

// Signed shoelace area in local coordinates.
inline double signed_area(const std::vector<Cplx>& closed)
{
    double a = 0;
    for (size_t k = 0; k + 1 < closed.size(); ++k)
        a += closed[k].real() * closed[k + 1].imag() - closed[k + 1].real() * closed[k].imag();
    return a / 2;
}

inline Region region_from_upper_arc(RegionKind kind, std::vector<Cplx> arc, const Real& origin = 0, const Real& scale = 1)
{
    if (arc.size() < 3)
        throw GeometryError("region_from_upper_arc: arc needs at least 3 samples");
    arc.front() = {arc.front().real(), 0.0};
    arc.back() = {arc.back().real(), 0.0};
    if (!(arc.front().real() > arc.back().real()))
        throw GeometryError("region_from_upper_arc: arc must run from right to left");
    Region r;
    r.kind = kind;
    r.origin = origin;
    r.scale = scale;
    r.boundary = arc;
    r.arc_end = arc.size() - 1;
    for (size_t k = arc.size() - 1; k-- > 1;)
        r.boundary.push_back(std::conj(arc[k]));
    r.boundary.push_back(arc.front());
    return r;
}

inline double region_area(const Region& r)
{
    double s = r.scale.convert_to<double>();
    return std::fabs(signed_area(r.boundary)) * s * s;
}

// Upper arc of a circle through the real points lo < hi whose arcs meet the real line at
// external angle alpha (pi/2: the round disc on [lo, hi]).
inline std::vector<Cplx> lens_arc(double lo, double hi, double alpha, int samples)
{
    double r = (hi - lo) / 2, m = (lo + hi) / 2;
    double h = r * std::cos(alpha) / std::sin(alpha);
    double R = r / std::sin(alpha);
    double a0 = std::atan2(-h, r);
    std::vector<Cplx> arc;
    arc.reserve(static_cast<size_t>(samples) + 1);
    for (int k = 0; k <= samples; ++k) {
        double phi = a0 + (std::numbers::pi - 2 * a0) * k / samples;
        arc.push_back({m + R * std::cos(phi), h + R * std::sin(phi)});
    }
    arc.front() = {hi, 0.0};
    arc.back() = {lo, 0.0};
    return arc;
}

inline Region poincare_lens(double lo, double hi, double alpha, int samples = 512)
{
    if (!(lo < hi))
        throw GeometryError("poincare_lens: degenerate interval");
    if (!(alpha > 0 && alpha < std::numbers::pi))
        throw GeometryError("poincare_lens: angle must be in (0, pi)");
    return region_from_upper_arc(RegionKind::PoincareLens, lens_arc(lo, hi, alpha, samples));
}

// D_*(J): the round disc symmetric about the real line with diameter J.
inline Region d_star(double a, double b, int samples = 512)
{
    Region r = poincare_lens(std::min(a, b), std::max(a, b), std::numbers::pi / 2, samples);
    r.kind = RegionKind::EuclidDisc;
    return r;
}

inline Region euclid_disc(double center, double radius, int samples = 512)
{
    return d_star(center - radius, center + radius, samples);
}

// Resamples a polyline uniformly in arclength, keeping both endpoints.
inline std::vector<Cplx> resample_arc(const std::vector<Cplx>& arc, size_t count)
{
    if (arc.size() < 2 || count < 2)
        return arc;
    std::vector<double> s(arc.size(), 0.0);
    for (size_t k = 1; k < arc.size(); ++k)
        s[k] = s[k - 1] + std::abs(arc[k] - arc[k - 1]);
    std::vector<Cplx> out;
    out.reserve(count);
    size_t j = 0;
    for (size_t k = 0; k < count; ++k) {
        double t = s.back() * static_cast<double>(k) / static_cast<double>(count - 1);
        while (j + 2 < arc.size() && s[j + 1] < t)
            ++j;
        double seg = s[j + 1] - s[j];
        double w = seg > 0 ? (t - s[j]) / seg : 0.0;
        out.push_back(arc[j] + w * (arc[j + 1] - arc[j]));
    }
    out.front() = arc.front();
    out.back() = arc.back();
    return out;
}

// Largest edge length, the sampling resolution of a boundary.
inline double resolution(const std::vector<Cplx>& closed)
{
    double h = 0;
    for (size_t k = 0; k + 1 < closed.size(); ++k)
        h = std::max(h, std::abs(closed[k + 1] - closed[k]));
    return h;
}

inline double point_segment_distance(Cplx p, Cplx a, Cplx b)
{
    Cplx ab = b - a;
    double L2 = std::norm(ab);
    double t = L2 > 0 ? std::clamp(((p - a) * std::conj(ab)).real() / L2, 0.0, 1.0) : 0.0;
    return std::abs(p - (a + t * ab));
}

// Edges of a closed polygon bucketed into horizontal bands (for ray casting) and square cells
// (for nearest-edge queries).
class EdgeIndex {
public:
    explicit EdgeIndex(const std::vector<Cplx>& closed, int bands = 256) : pts_(closed)
    {
        if (closed.size() < 4)
            throw GeometryError("EdgeIndex: polygon needs at least 3 vertices");
        lo_ = hi_ = closed.front();
        for (auto p : closed) {
            lo_ = {std::min(lo_.real(), p.real()), std::min(lo_.imag(), p.imag())};
            hi_ = {std::max(hi_.real(), p.real()), std::max(hi_.imag(), p.imag())};
        }
        double span_y = std::max(hi_.imag() - lo_.imag(), 1e-300);
        nb_ = bands;
        bh_ = span_y / nb_;
        band_.resize(static_cast<size_t>(nb_));
        double span = std::max(hi_.real() - lo_.real(), span_y);
        cells_ = std::max(1, std::min(512, static_cast<int>(std::sqrt(static_cast<double>(closed.size())))));
        cs_ = span / cells_ * (1 + 1e-12);
        grid_.resize(static_cast<size_t>(cells_ * cells_));
        for (size_t e = 0; e + 1 < closed.size(); ++e) {
            Cplx a = closed[e], b = closed[e + 1];
            int b0 = band_of(std::min(a.imag(), b.imag())), b1 = band_of(std::max(a.imag(), b.imag()));
            for (int k = b0; k <= b1; ++k)
                band_[static_cast<size_t>(k)].push_back(e);
            auto [x0, y0] = cell_of(Cplx(std::min(a.real(), b.real()), std::min(a.imag(), b.imag())));
            auto [x1, y1] = cell_of(Cplx(std::max(a.real(), b.real()), std::max(a.imag(), b.imag())));
            for (int i = x0; i <= x1; ++i)
                for (int j = y0; j <= y1; ++j)
                    grid_[static_cast<size_t>(i * cells_ + j)].push_back(e);
        }
    }

    // Crossing-number test; points exactly on the boundary count as either.
    bool inside(Cplx p) const
    {
        if (p.imag() < lo_.imag() || p.imag() > hi_.imag() || p.real() < lo_.real() || p.real() > hi_.real())
            return false;
        bool in = false;
        for (size_t e : band_[static_cast<size_t>(band_of(p.imag()))]) {
            Cplx a = pts_[e], b = pts_[e + 1];
            if ((a.imag() > p.imag()) != (b.imag() > p.imag())) {
                double x = a.real() + (p.imag() - a.imag()) / (b.imag() - a.imag()) * (b.real() - a.real());
                if (x > p.real())
                    in = !in;
            }
        }
        return in;
    }

    double distance(Cplx p) const
    {
        auto [ci, cj] = cell_of(p);
        double best = 1e300;
        for (int ring = 0; ring <= 2 * cells_; ++ring) {
            for (int i = ci - ring; i <= ci + ring; ++i)
                for (int j = cj - ring; j <= cj + ring; ++j) {
                    if (std::max(std::abs(i - ci), std::abs(j - cj)) != ring)
                        continue;
                    if (i < 0 || j < 0 || i >= cells_ || j >= cells_)
                        continue;
                    for (size_t e : grid_[static_cast<size_t>(i * cells_ + j)])
                        best = std::min(best, point_segment_distance(p, pts_[e], pts_[e + 1]));
                }
            // every edge not yet seen lies at least ring * cs_ away (p may sit outside the grid)
            double outside = std::max({lo_.real() - p.real(), p.real() - hi_.real(), lo_.imag() - p.imag(),
                                       p.imag() - hi_.imag(), 0.0});
            if (best <= ring * cs_ + outside && best < 1e300)
                break;
        }
        return best;
    }

    const std::vector<size_t>& band_edges(int k) const { return band_[static_cast<size_t>(k)]; }
    int bands() const { return nb_; }

private:
    int band_of(double y) const { return std::clamp(static_cast<int>((y - lo_.imag()) / bh_), 0, nb_ - 1); }
    std::pair<int, int> cell_of(Cplx p) const
    {
        int i = std::clamp(static_cast<int>((p.real() - lo_.real()) / cs_), 0, cells_ - 1);
        int j = std::clamp(static_cast<int>((p.imag() - lo_.imag()) / cs_), 0, cells_ - 1);
        return {i, j};
    }

    std::vector<Cplx> pts_;
    Cplx lo_, hi_;
    int nb_ = 1, cells_ = 1;
    double bh_ = 1, cs_ = 1;
    std::vector<std::vector<size_t>> band_, grid_;
};

inline bool segments_cross(Cplx a, Cplx b, Cplx c, Cplx d)
{
    auto orient = [](Cplx p, Cplx q, Cplx r) {
        double v = (q - p).real() * (r - p).imag() - (q - p).imag() * (r - p).real();
        return (v > 0) - (v < 0);
    };
    int o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
    return o1 * o2 < 0 && o3 * o4 < 0;
}

// True if no two non-adjacent edges properly cross.
inline bool is_simple(const std::vector<Cplx>& closed)
{
    EdgeIndex idx(closed, 1024);
    const size_t m = closed.size() - 1;
    for (int k = 0; k < idx.bands(); ++k) {
        const auto& E = idx.band_edges(k);
        for (size_t i = 0; i < E.size(); ++i)
            for (size_t j = i + 1; j < E.size(); ++j) {
                size_t e = E[i], f = E[j];
                size_t gap = e > f ? e - f : f - e;
                if (gap <= 1 || gap == m - 1)
                    continue;
                if (segments_cross(closed[e], closed[e + 1], closed[f], closed[f + 1]))
                    return false;
            }
    }
    return true;
}

// Exact conjugation symmetry of a region built from an upper arc.
inline bool conjugation_symmetric(const Region& r)
{
    if (r.arc_end == 0)
        return false;
    const size_t m = r.size();
    for (size_t k = 1; k < r.arc_end; ++k)
        if (r.boundary[m - k] != std::conj(r.boundary[k]))
            return false;
    return r.boundary[0].imag() == 0 && r.boundary[r.arc_end].imag() == 0;
}

enum class Containment { Contained, NotContained, Inconclusive };

inline const char* to_string(Containment c)
{
    return c == Containment::Contained ? "contained" : (c == Containment::NotContained ? "not-contained" : "inconclusive");
}

struct ContainmentReport {
    Containment verdict = Containment::Inconclusive;
    double separation = 0;  // min distance of the inner samples to the outer boundary
    double resolution = 0;  // max edge length of the two boundaries
    size_t outside = 0;     // inner samples failing the point test
};

// Inner boundary (closed, same coordinates as outer) inside outer with a margin of more than
// 10x the sampling resolution.
inline ContainmentReport region_contains(const std::vector<Cplx>& outer, const std::vector<Cplx>& inner)
{
    EdgeIndex idx(outer);
    ContainmentReport rep;
    rep.resolution = std::max(resolution(outer), resolution(inner));
    rep.separation = 1e300;
    for (size_t k = 0; k + 1 < inner.size(); ++k) {
        if (!idx.inside(inner[k]))
            ++rep.outside;
        rep.separation = std::min(rep.separation, idx.distance(inner[k]));
    }
    if (rep.outside > 0)
        rep.verdict = rep.separation > 10 * rep.resolution ? Containment::NotContained : Containment::Inconclusive;
    else
        rep.verdict = rep.separation > 10 * rep.resolution ? Containment::Contained : Containment::Inconclusive;
    return rep;
}

inline ContainmentReport region_contains(const Region& outer, const Region& inner)
{
    if (outer.origin != inner.origin || outer.scale != inner.scale)
        throw GeometryError("region_contains: regions use different local coordinates");
    return region_contains(outer.boundary, inner.boundary);
}

// Subdivides the edges of a closed polygon until none is longer than h.
inline std::vector<Cplx> densify(const std::vector<Cplx>& closed, double h)
{
    std::vector<Cplx> out;
    for (size_t k = 0; k + 1 < closed.size(); ++k) {
        int pieces = std::max(1, static_cast<int>(std::ceil(std::abs(closed[k + 1] - closed[k]) / h)));
        for (int j = 0; j < pieces; ++j)
            out.push_back(closed[k] + (closed[k + 1] - closed[k]) * (static_cast<double>(j) / pieces));
    }
    out.push_back(closed.back());
    return out;
}

// Sutherland-Hodgman clip of a convex polygon (closed) by the half-plane Im((p - a) conj(d)) <= 0,
// i.e. the points to the right of the directed line through a with direction d.
inline std::vector<Cplx> clip_halfplane(const std::vector<Cplx>& closed, Cplx a, Cplx d)
{
    auto side = [&](Cplx p) { return ((p - a) * std::conj(d)).imag(); };
    std::vector<Cplx> out;
    for (size_t k = 0; k + 1 < closed.size(); ++k) {
        Cplx p = closed[k], q = closed[k + 1];
        double sp = side(p), sq = side(q);
        if (sp <= 0)
            out.push_back(p);
        if ((sp < 0 && sq > 0) || (sp > 0 && sq < 0))
            out.push_back(p + (q - p) * (sp / (sp - sq)));
    }
    if (!out.empty())
        out.push_back(out.front());
    return out;
}

// S_kappa(z, y): for each of the l rotations, the closure of the two components of the sector
// |arg| < 2 pi / l cut by the lines through z and y at angles +-kappa that meet (0, y): a
// wedge with vertex z pointing at 0 and a quadrilateral with vertices z and y. Each piece is
// returned as a closed convex polygon; kappa = 0 gives the degenerate segments.
inline std::vector<Region> star_region(double kappa, double z, double y, int l)
{
    if (!(0 < z && z < y))
        throw GeometryError("star_region: need 0 < z < y");
    if (!(kappa >= 0 && kappa < std::numbers::pi / 2))
        throw GeometryError("star_region: kappa must be in [0, pi/2)");
    if (l < 4)
        throw GeometryError("star_region: the sector is not convex for l < 4");
    const double th = 2 * std::numbers::pi / l;
    const Cplx up = std::polar(1.0, th), down = std::polar(1.0, -th);
    std::vector<std::vector<Cplx>> base;
    if (kappa == 0) {
        base.push_back({0.0, z, 0.0});
        base.push_back({z, y, z});
    } else {
        const double t = std::tan(kappa), R = 4 * y;
        std::vector<Cplx> wedge{z, Cplx(z - R, R * t), Cplx(z - R, -R * t), z};
        std::vector<Cplx> quad{z, Cplx((z + y) / 2, t * (y - z) / 2), y, Cplx((z + y) / 2, -t * (y - z) / 2), z};
        for (auto* P : {&wedge, &quad}) {
            auto c = clip_halfplane(*P, 0.0, up);       // below the upper ray
            c = clip_halfplane(c, 0.0, -down);          // above the lower ray
            if (c.size() < 4 || std::fabs(signed_area(c)) == 0)
                throw GeometryError("star_region: empty component");
            base.push_back(c);
        }
    }
    std::vector<Region> out;
    for (int i = 0; i < l; ++i) {
        Cplx rot = std::polar(1.0, th * i);
        for (const auto& P : base) {
            Region r;
            r.kind = RegionKind::Star;
            for (auto p : P)
                r.boundary.push_back(i == 0 ? p : p * rot);
            r.label = "S" + std::to_string(i);
            out.push_back(r);
        }
    }
    return out;
}

// max over samples of dist(rotate(b), boundary) / diameter for the rotation by 2 pi / l.
inline double rotation_defect(const Region& r, int l, size_t stride = 1)
{
    EdgeIndex idx(r.boundary);
    double diam = 0;
    for (auto p : r.boundary)
        diam = std::max(diam, 2 * std::abs(p));
    Cplx rot = std::polar(1.0, 2 * std::numbers::pi / l);
    double d = 0;
    for (size_t k = 0; k < r.size(); k += stride)
        d = std::max(d, idx.distance(r.boundary[k] * rot));
    return d / diam;
}

} // namespace fiblab
