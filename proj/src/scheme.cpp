#include "hjb/scheme.hpp"

#include "hjb/highorder.hpp"
#include "hjb/monotone.hpp"

namespace hjb {

const char* scheme_name(SchemeKind kind) {
    switch (kind) {
    case SchemeKind::IE: return "ie";
    case SchemeKind::SL: return "sl";
    case SchemeKind::BDF2: return "bdf2";
    case SchemeKind::CN: return "cn";
    case SchemeKind::CNRannacher: return "cn-rannacher";
    case SchemeKind::FD2D: return "fd2d";
    }
    return "?";
}

SchemeKind scheme_from_name(const std::string& name) {
    if (name == "ie") return SchemeKind::IE;
    if (name == "sl") return SchemeKind::SL;
    if (name == "bdf2") return SchemeKind::BDF2;
    if (name == "cn") return SchemeKind::CN;
    if (name == "cn-rannacher") return SchemeKind::CNRannacher;
    if (name == "fd2d") return SchemeKind::FD2D;
    throw InvalidArgument("unknown scheme: " + name);
}

std::unique_ptr<SchemeFamily> make_family(SchemeKind kind, const HJBProblem& problem,
                                          const SpatialGrid1D& grid, double tau) {
    require(problem.dimension == 1, "1D grid requires a 1D problem");
    switch (kind) {
    case SchemeKind::IE: return make_ie_family(problem, grid, tau);
    case SchemeKind::SL: return make_sl_family(problem, grid, tau);
    case SchemeKind::BDF2: return make_bdf2_family(problem, grid, tau);
    case SchemeKind::CN: return make_cn_family(problem, grid, tau, false);
    case SchemeKind::CNRannacher: return make_cn_family(problem, grid, tau, true);
    case SchemeKind::FD2D: break;
    }
    throw InvalidArgument("scheme not available on a 1D grid");
}

std::unique_ptr<SchemeFamily> make_family(SchemeKind kind, const HJBProblem& problem,
                                          const PeriodicGrid2D& grid, double tau) {
    require(problem.dimension == 2, "2D grid requires a 2D problem");
    switch (kind) {
    case SchemeKind::SL: return make_sl2d_family(problem, grid, tau);
    case SchemeKind::FD2D: return make_fd2d_family(problem, grid, tau);
    default: break;
    }
    throw InvalidArgument("scheme not available on the periodic 2D grid");
}

} // namespace hjb
