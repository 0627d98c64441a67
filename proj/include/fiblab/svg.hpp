#pragma once

#include "region.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace fiblab {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SvgOptions {
    double width = 800;   // pixels; the height follows the aspect ratio
    double margin = 0.05; // fraction of the larger extent
    bool labels = true;
};

namespace detail {

// Fixed six decimals; values that round to zero print as 0 so that mirrored points match.
inline std::string svg_num(double v)
{
    if (std::fabs(v) < 5e-7)
        v = 0;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

} // namespace detail

// One closed path per region in absolute coordinates (the y axis points up), with a level
// label at the rightmost real point. Output depends only on the inputs.
inline std::string render_svg(const std::vector<const Region*>& regions, const SvgOptions& opt = {})
{
    double xmin = -1, xmax = 1, ymin = -1, ymax = 1;
    bool first = true;
    for (const Region* r : regions)
        for (auto b : r->boundary) {
            Cplx q = r->absolute(b);
            if (first) {
                xmin = xmax = q.real();
                ymin = ymax = q.imag();
                first = false;
            }
            xmin = std::min(xmin, q.real());
            xmax = std::max(xmax, q.real());
            ymin = std::min(ymin, q.imag());
            ymax = std::max(ymax, q.imag());
        }
    double ext = std::max({xmax - xmin, ymax - ymin, 1e-300});
    double pad = opt.margin * ext;
    double vx = xmin - pad, vy = -(ymax + pad), vw = xmax - xmin + 2 * pad, vh = ymax - ymin + 2 * pad;
    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << detail::svg_num(opt.width) << "\" height=\""
       << detail::svg_num(opt.width * vh / vw) << "\" viewBox=\"" << detail::svg_num(vx) << ' ' << detail::svg_num(vy) << ' '
       << detail::svg_num(vw) << ' ' << detail::svg_num(vh) << "\">\n";
    const double stroke = ext / 800;
    for (size_t k = 0; k < regions.size(); ++k) {
        const Region* r = regions[k];
        os << "<path id=\"" << (r->label.empty() ? "region" + std::to_string(k) : r->label) << "\" data-level=\"" << r->level
           << "\" data-kind=\"" << to_string(r->kind) << "\" fill=\"none\" stroke=\"black\" stroke-width=\""
           << detail::svg_num(stroke) << "\" d=\"";
        for (size_t j = 0; j < r->size(); ++j) {
            Cplx q = r->absolute(r->boundary[j]);
            os << (j == 0 ? "M" : " L") << detail::svg_num(q.real()) << ' ' << detail::svg_num(-q.imag());
        }
        os << " Z\"/>\n";
        if (opt.labels && !r->boundary.empty()) {
            Cplx q = r->absolute(r->boundary[0]);
            os << "<text x=\"" << detail::svg_num(q.real()) << "\" y=\"" << detail::svg_num(-q.imag()) << "\" font-size=\""
               << detail::svg_num(ext / 60) << "\">" << (r->label.empty() ? std::to_string(r->level) : r->label) << "</text>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

inline void write_text_file(const std::string& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open " + path + " for writing");
    f << text;
    if (!f)
        throw IoError("write failed: " + path);
}

// Points of every path in a rendered document, for structural checks.
inline std::vector<std::vector<Cplx>> svg_paths(const std::string& doc)
{
    std::vector<std::vector<Cplx>> out;
    for (size_t pos = doc.find(" d=\""); pos != std::string::npos; pos = doc.find(" d=\"", pos + 1)) {
        size_t end = doc.find('"', pos + 4);
        std::string d = doc.substr(pos + 4, end - pos - 4);
        for (char& c : d)
            if (c == 'M' || c == 'L' || c == 'Z')
                c = ' ';
        std::istringstream is(d);
        std::vector<Cplx> pts;
        double x, y;
        while (is >> x >> y)
            pts.push_back({x, -y});
        out.push_back(pts);
    }
    return out;
}

} // namespace fiblab
