#include "qsdlab/model_io.hpp"

#include "qsdlab/error.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace qsd {

namespace {

using nlohmann::json;

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
    throw Error(ErrorKind::ParseError, "field '" + field + "': " + what);
}

double number_at(const json& value, const std::string& field) {
    if (!value.is_number()) field_error(field, "expected a number, got " + std::string(value.type_name()));
    const double v = value.get<double>();
    if (!std::isfinite(v)) field_error(field, "non-finite number");
    return v;
}

std::vector<double> number_list(const json& value, const std::string& field) {
    if (!value.is_array()) field_error(field, "expected a list of numbers");
    std::vector<double> out;
    out.reserve(value.size());
    for (std::size_t i = 0; i < value.size(); ++i) {
        out.push_back(number_at(value[i], field + "[" + std::to_string(i) + "]"));
    }
    return out;
}

Vector to_vector(const std::vector<double>& v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
    return out;
}

Matrix matrix_field(const json& value) {
    if (!value.is_array() || value.empty()) field_error("generator", "expected a nonempty list of rows");
    const std::size_t n = value.size();
    Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const std::string name = "generator[" + std::to_string(i) + "]";
        const auto row = number_list(value[i], name);
        if (row.size() != n) {
            field_error(name, "row has " + std::to_string(row.size()) + " entries, expected " + std::to_string(n));
        }
        for (std::size_t j = 0; j < n; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
    }
    return m;
}

AbsorbedChain birth_death_field(const json& value) {
    if (!value.is_object()) field_error("birth_death", "expected an object {n, birth, death}");
    for (const char* key : {"n", "birth", "death"}) {
        if (!value.contains(key)) field_error(std::string("birth_death.") + key, "missing");
    }
    if (!value["n"].is_number_integer() || value["n"].get<long long>() < 1) {
        field_error("birth_death.n", "expected an integer >= 1");
    }
    const auto n = static_cast<std::size_t>(value["n"].get<long long>());
    return build_birth_death(n, number_list(value["birth"], "birth_death.birth"),
                             number_list(value["death"], "birth_death.death"));
}

template <class Fn>
auto as_validation(Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::ParseError || e.kind() == ErrorKind::ValidationError) throw;
        throw Error(ErrorKind::ValidationError, std::string(to_string(e.kind())) + ": " + e.what());
    }
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_list(std::ostringstream& out, const Vector& v) {
    out << "[";
    for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? ", " : "") << format_double(v(i));
    out << "]";
}

}  // namespace

ModelBundle parse_model_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::ParseError, e.what());
    }
    if (!doc.is_object()) throw Error(ErrorKind::ParseError, "model file must be a JSON object");

    static const char* known[] = {"states", "generator", "birth_death", "psi1", "mu", "observable"};
    for (const auto& item : doc.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || item.key() == k;
        if (!ok) field_error(item.key(), "unknown key");
    }

    const bool has_gen = doc.contains("generator");
    const bool has_bd = doc.contains("birth_death");
    if (has_gen == has_bd) {
        throw Error(ErrorKind::ParseError, "exactly one of 'generator' or 'birth_death' is required");
    }

    std::vector<std::string> states;
    if (doc.contains("states")) {
        const auto& s = doc["states"];
        if (!s.is_array()) field_error("states", "expected a list of labels");
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (!s[i].is_string()) field_error("states[" + std::to_string(i) + "]", "expected a string");
            states.push_back(s[i].get<std::string>());
        }
    }

    AbsorbedChain chain = as_validation([&] {
        if (has_gen) return validate_chain(matrix_field(doc["generator"]), states);
        AbsorbedChain bd = birth_death_field(doc["birth_death"]);
        return states.empty() ? bd : validate_chain(bd.generator(), states);
    });
    const std::size_t n = chain.size();

    auto sized = [&](const char* key) {
        Vector v = to_vector(number_list(doc[key], key));
        if (static_cast<std::size_t>(v.size()) != n) {
            field_error(key, "has " + std::to_string(v.size()) + " entries, expected " + std::to_string(n));
        }
        return v;
    };

    WeightFunction weight = doc.contains("psi1") ? as_validation([&] { return make_weight(sized("psi1")); })
                                                 : WeightFunction::ones(n);
    InitialLaw initial = doc.contains("mu") ? as_validation([&] { return make_initial_law(sized("mu")); })
                                            : InitialLaw::uniform(n);
    Vector f;
    if (doc.contains("observable")) {
        f = sized("observable");
        if (f.cwiseAbs().maxCoeff() > 1.0) {
            throw Error(ErrorKind::ValidationError, "observable must satisfy |f| <= 1");
        }
    } else {
        f = Vector::Zero(static_cast<Eigen::Index>(n));
        f(0) = 1.0;
    }
    return ModelBundle{std::move(chain), std::move(weight), std::move(initial), std::move(f)};
}

ModelBundle load_model_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::ParseError, "cannot open model file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model_config(buf.str());
}

std::string emit_model_config(const ModelBundle& bundle) {
    const auto& l = bundle.chain.generator();
    std::ostringstream out;
    out << "{\n  \"states\": [";
    const auto& states = bundle.chain.states();
    for (std::size_t i = 0; i < states.size(); ++i) out << (i ? ", " : "") << json(states[i]).dump();
    out << "],\n  \"generator\": [\n";
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
        out << "    ";
        write_list(out, l.row(i).transpose());
        out << (i + 1 < l.rows() ? ",\n" : "\n");
    }
    out << "  ],\n  \"psi1\": ";
    write_list(out, bundle.weight.psi1);
    out << ",\n  \"mu\": ";
    write_list(out, bundle.initial.mu);
    out << ",\n  \"observable\": ";
    write_list(out, bundle.observable);
    out << "\n}\n";
    return out.str();
}

ModelBundle resolve_model(const std::string& name_or_path) {
    if (auto b = fixtures::bundle(name_or_path)) return *b;
    return load_model_config(name_or_path);
}

}  // namespace qsd
