// Copyright 2026 The pilotwave Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pilotwave/grid.hpp"

#include "pilotwave/error.hpp"

#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <limits>

namespace pw {

void write_csv(const WaveFunction &psi, const std::string &path) {
    std::FILE *f = std::fopen(path.c_str(), "w");
    if (!f)
        raise(ErrorKind::Io, "cannot open " + path);
    const Grid &grid = psi.grid();
    std::fputs(grid.dims() == 2 ? "x,y,re,im,density,phase\n" : "x,re,im,density,phase\n", f);
    for (Eigen::Index k = 0; k < grid.size(); ++k) {
        const Position r = grid.point(k);
        const Complex a = psi.amplitudes()[k];
        if (grid.dims() == 2)
            std::fprintf(f, "%.10g,%.10g,", r.x(), r.y());
        else
            std::fprintf(f, "%.10g,", r.x());
        std::fprintf(f, "%.12g,%.12g,%.12g,%.12g\n", a.real(), a.imag(), std::norm(a), std::arg(a));
    }
    std::fclose(f);
}

// One line of JSON, then the raw little-endian complex128 payload.
void write_snapshot(const WaveFunction &psi, const std::string &path) {
    nlohmann::json header;
    header["format"] = "pilotwave-snapshot";
    header["schema_version"] = 1;
    header["dims"] = psi.grid().dims();
    header["axes"] = nlohmann::json::array();
    for (int d = 0; d < psi.grid().dims(); ++d) {
        const Axis &a = psi.grid().axis(d);
        header["axes"].push_back({{"lo", a.lo}, {"hi", a.hi}, {"n", a.n}});
    }
    header["mass"] = psi.mass();
    header["hbar"] = psi.hbar();
    header["payload"] = "complex128-le";
    header["count"] = psi.grid().size();
    std::ofstream out(path, std::ios::binary);
    if (!out)
        raise(ErrorKind::Io, "cannot open " + path);
    out << header.dump() << '\n';
    out.write(reinterpret_cast<const char *>(psi.amplitudes().data()),
              static_cast<std::streamsize>(sizeof(Complex) * static_cast<std::size_t>(psi.grid().size())));
    if (!out)
        raise(ErrorKind::Io, "short write to " + path);
}

WaveFunction read_snapshot(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        raise(ErrorKind::Io, "cannot open " + path);
    std::string line;
    std::getline(in, line);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception &e) {
        raise(ErrorKind::Io, "bad snapshot header in " + path + ": " + e.what());
    }
    if (header.value("format", "") != "pilotwave-snapshot" || header.value("schema_version", 0) != 1)
        raise(ErrorKind::Io, "unsupported snapshot format in " + path);
    std::vector<Axis> axes;
    for (const auto &a : header["axes"])
        axes.push_back(Axis{a["lo"].get<double>(), a["hi"].get<double>(), a["n"].get<int>()});
    const Grid grid = axes.size() == 2 ? Grid::plane(axes[0], axes[1]) : Grid::line(axes.at(0));
    Eigen::VectorXcd amps(grid.size());
    in.read(reinterpret_cast<char *>(amps.data()),
            static_cast<std::streamsize>(sizeof(Complex) * static_cast<std::size_t>(grid.size())));
    if (!in)
        raise(ErrorKind::Io, "truncated payload in " + path);
    return WaveFunction(grid, std::move(amps), header["mass"].get<double>(), header["hbar"].get<double>());
}

} // namespace pw
