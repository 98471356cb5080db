#include "tnd/manifest.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tnd/errors.hpp"
#include "tnd/qten_io.hpp"

namespace tnd {

namespace fs = std::filesystem;

std::string fnv1a_hex(const void* data, std::size_t len) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

std::string fnv1a_file_hex(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw validation_error("cannot open " + path + " for hashing");
    std::vector<char> bytes((std::istreambuf_iterator<char>(f)),
                            std::istreambuf_iterator<char>());
    return fnv1a_hex(bytes.data(), bytes.size());
}

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw validation_error("cannot open " + tmp);
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!f) throw validation_error("short write to " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw validation_error("cannot rename " + tmp + " to " + path);
}

namespace {

ordered_json circuit_info(const Circuit& c) {
    ordered_json j;
    j["side"] = c.side == Side::output ? "output" : "input";
    j["parity_start"] = c.parity_start == Parity::even ? "even" : "odd";
    j["num_layers"] = c.num_layers();
    return j;
}

std::string which_stem(const std::string& which) {
    return which == "u" ? "u" : "v";
}

} // namespace

void save_factorized(const std::string& path, const FactorizedOperator& fac,
                     const ordered_json& config_echo, const ordered_json& metrics) {
    fac.validate();
    const fs::path p(path);
    const fs::path dir = p.parent_path();
    const std::string stem = p.stem().string();

    ordered_json doc;
    doc["schema_version"] = 1;
    doc["kind"] = "factorized_layer";
    doc["site_spec"]["out_dims"] = fac.site_spec.out_dims;
    doc["site_spec"]["in_dims"] = fac.site_spec.in_dims;
    doc["circuits"]["u"] = circuit_info(fac.u);
    doc["circuits"]["v_dag"] = circuit_info(fac.v_dag);
    if (fac.core.canonical_center)
        doc["core_canonical_center"] = *fac.core.canonical_center;
    else
        doc["core_canonical_center"] = nullptr;

    ordered_json tensors = ordered_json::array();
    auto emit = [&](const std::string& file, const DenseTensor& t, ordered_json entry) {
        write_qten((dir / file).string(), t);
        entry["file"] = file;
        tensors.push_back(std::move(entry));
    };
    for (std::size_t i = 0; i < fac.core.cores.size(); ++i)
        emit(stem + "_core_" + std::to_string(i) + ".qten", fac.core.cores[i],
             ordered_json{{"role", "core"}, {"site", i}});
    for (const std::string which : {"u", "v_dag"}) {
        const Circuit& c = which == "u" ? fac.u : fac.v_dag;
        for (std::size_t l = 0; l < c.layers.size(); ++l)
            for (const Gate& g : c.layers[l])
                emit(stem + "_" + which_stem(which) + "_l" + std::to_string(l) + "_s" +
                         std::to_string(g.site) + ".qten",
                     g.matrix,
                     ordered_json{{"role", "gate"},
                                  {"which", which},
                                  {"layer", l},
                                  {"site", g.site}});
    }
    doc["tensors"] = std::move(tensors);
    doc["config"] = config_echo;

    ordered_json prov = ordered_json::object();
    for (const auto& [k, v] : fac.provenance) prov[k] = v;
    prov["tool_version"] = tool_version;
    doc["provenance"] = std::move(prov);
    doc["metrics"] = metrics;

    write_text_atomic(path, doc.dump(2) + "\n");
}

LoadedFactorized load_factorized(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw validation_error("cannot open manifest " + path);
    ordered_json doc;
    try {
        doc = ordered_json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw validation_error("malformed manifest " + path + ": " + e.what());
    }

    try {
        if (doc.at("schema_version").get<int>() != 1)
            throw validation_error("manifest " + path + ": unsupported schema version");
        if (doc.at("kind").get<std::string>() != "factorized_layer")
            throw validation_error("manifest " + path + ": unexpected kind");

        FactorizedOperator fac;
        fac.site_spec.out_dims =
            doc.at("site_spec").at("out_dims").get<std::vector<std::size_t>>();
        fac.site_spec.in_dims =
            doc.at("site_spec").at("in_dims").get<std::vector<std::size_t>>();
        fac.site_spec.validate();
        const std::size_t k = fac.site_spec.num_sites();

        auto build_circuit = [&](const std::string& which) {
            const ordered_json& cj = doc.at("circuits").at(which);
            Circuit c;
            c.side = cj.at("side").get<std::string>() == "output" ? Side::output
                                                                  : Side::input;
            c.site_dims = c.side == Side::output ? fac.site_spec.out_dims
                                                 : fac.site_spec.in_dims;
            c.num_sites = k;
            c.parity_start = cj.at("parity_start").get<std::string>() == "even"
                                 ? Parity::even
                                 : Parity::odd;
            c.layers.resize(cj.at("num_layers").get<std::size_t>());
            return c;
        };
        fac.u = build_circuit("u");
        fac.v_dag = build_circuit("v_dag");

        const fs::path dir = fs::path(path).parent_path();
        std::vector<DenseTensor> cores(k);
        std::vector<bool> have_core(k, false);
        for (const ordered_json& entry : doc.at("tensors")) {
            const std::string file = entry.at("file").get<std::string>();
            DenseTensor t = read_qten((dir / file).string());
            const std::string role = entry.at("role").get<std::string>();
            if (role == "core") {
                const std::size_t site = entry.at("site").get<std::size_t>();
                if (site >= k)
                    throw validation_error("manifest " + path + ": core site out of range");
                cores[site] = std::move(t);
                have_core[site] = true;
            } else if (role == "gate") {
                const std::string which = entry.at("which").get<std::string>();
                Circuit& c = which == "u" ? fac.u : fac.v_dag;
                Gate g;
                g.site = entry.at("site").get<std::size_t>();
                const std::size_t layer = entry.at("layer").get<std::size_t>();
                if (layer >= c.layers.size() || g.site + 1 >= k)
                    throw validation_error("manifest " + path + ": gate out of range");
                g.d_left = c.site_dims[g.site];
                g.d_right = c.site_dims[g.site + 1];
                g.matrix = std::move(t);
                c.layers[layer].push_back(std::move(g));
            } else {
                throw validation_error("manifest " + path + ": unknown tensor role " + role);
            }
        }
        for (std::size_t i = 0; i < k; ++i)
            if (!have_core[i])
                throw validation_error("manifest " + path + ": missing core " +
                                       std::to_string(i));
        for (Circuit* c : {&fac.u, &fac.v_dag})
            for (auto& layer : c->layers)
                std::sort(layer.begin(), layer.end(),
                          [](const Gate& a, const Gate& b) { return a.site < b.site; });

        fac.core.cores = std::move(cores);
        fac.core.site_spec = fac.site_spec;
        if (!doc.at("core_canonical_center").is_null())
            fac.core.canonical_center =
                doc.at("core_canonical_center").get<std::size_t>();

        if (doc.contains("provenance"))
            for (const auto& [key, val] : doc.at("provenance").items())
                if (val.is_string()) fac.provenance[key] = val.get<std::string>();

        fac.validate();
        return {std::move(fac), std::move(doc)};
    } catch (const nlohmann::json::exception& e) {
        throw validation_error("malformed manifest " + path + ": " + e.what());
    }
}

} // namespace tnd
