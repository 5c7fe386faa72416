#include "lscape/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace lscape {

using nlohmann::json;

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    for (std::string& s : out) {
        size_t a = s.find_first_not_of(" \t");
        size_t b = s.find_last_not_of(" \t");
        s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
    }
    return out;
}

double parse_num(const std::string& s, int row, const char* what) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw parse_error(std::string("cannot parse ") + what + " '" + s + "'", row);
    }
}

LabeledDataset load_csv(const std::string& path, bool normalize) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw parse_error("empty file " + path, 1);
    std::vector<std::string> header = split_csv_line(line);
    int d = 0;
    while (d < int(header.size()) && header[d] == "x" + std::to_string(d + 1)) ++d;
    if (d == 0) throw parse_error("header must start with x1..xd", 1);
    if (d >= int(header.size()) || header[d] != "label")
        throw parse_error("header must contain a label column after x1..xd", 1);
    bool has_weight = d + 1 < int(header.size()) && header[d + 1] == "weight";
    int expected = d + 1 + (has_weight ? 1 : 0);
    if (int(header.size()) != expected) throw parse_error("unexpected extra columns", 1);

    std::vector<Vec> points;
    std::vector<int> raw_labels;
    Vec weights;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        std::vector<std::string> f = split_csv_line(line);
        if (int(f.size()) != expected)
            throw parse_error("expected " + std::to_string(expected) + " fields, got " +
                                  std::to_string(f.size()),
                              row);
        Vec x(d);
        for (int j = 0; j < d; ++j) x[j] = parse_num(f[j], row, "coordinate");
        double lv = parse_num(f[d], row, "label");
        if (lv != std::floor(lv)) throw parse_error("label must be an integer", row);
        points.push_back(std::move(x));
        raw_labels.push_back(int(lv));
        weights.push_back(has_weight ? parse_num(f[d + 1], row, "weight") : 1.0);
    }
    if (points.empty()) throw parse_error("no data rows", row);

    bool binary = true;
    for (int y : raw_labels) binary = binary && (y == 1 || y == -1);
    LabeledDataset data;
    if (binary) {
        data.mode = LabelMode::Binary;
        data.labels = raw_labels;
    } else {
        int R = 0;
        for (int y : raw_labels) {
            if (y < 1) throw parse_error("multiclass labels must be 1..R");
            R = std::max(R, y);
        }
        data.mode = LabelMode::MultiClass;
        data.num_classes = std::max(R, 2);
        for (int y : raw_labels) data.labels.push_back(y - 1);
    }
    data.points = std::move(points);
    data.weights = std::move(weights);
    if (normalize) data.normalize_weights();
    data.validate();
    return data;
}

}  // namespace

LabeledDataset dataset_from_json(const json& j, bool normalize) {
    LabeledDataset data;
    std::string mode = j.value("mode", "binary");
    std::vector<Vec> points;
    for (const auto& row : j.at("points")) points.push_back(row.get<Vec>());
    data.points = std::move(points);
    if (mode == "binary") {
        data.mode = LabelMode::Binary;
        data.labels = j.at("labels").get<std::vector<int>>();
    } else if (mode == "multiclass") {
        data.mode = LabelMode::MultiClass;
        for (int y : j.at("labels").get<std::vector<int>>()) data.labels.push_back(y - 1);
        data.num_classes = j.value("num_classes", 0);
        if (data.num_classes == 0) {
            for (int y : data.labels) data.num_classes = std::max(data.num_classes, y + 1);
            data.num_classes = std::max(data.num_classes, 2);
        }
    } else {
        throw parse_error("mode must be 'binary' or 'multiclass'");
    }
    if (j.contains("weights"))
        data.weights = j.at("weights").get<Vec>();
    else
        data.weights.assign(data.points.size(), 1.0 / double(data.points.size()));
    if (normalize) data.normalize_weights();
    data.validate();
    return data;
}

nlohmann::json dataset_to_json(const LabeledDataset& data) {
    json j;
    j["mode"] = data.mode == LabelMode::Binary ? "binary" : "multiclass";
    j["points"] = data.points;
    if (data.mode == LabelMode::Binary) {
        j["labels"] = data.labels;
    } else {
        std::vector<int> labels;
        for (int y : data.labels) labels.push_back(y + 1);
        j["labels"] = labels;
        j["num_classes"] = data.num_classes;
    }
    j["weights"] = data.weights;
    return j;
}

LabeledDataset load_dataset(const std::string& path, bool normalize) {
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json")
        return dataset_from_json(read_json(path), normalize);
    return load_csv(path, normalize);
}

namespace {

NetworkShape shape_from_json(const json& j) {
    NetworkShape s;
    s.input_dim = j.at("input_dim").get<int>();
    s.hidden = j.value("hidden", std::vector<int>{});
    s.output_dim = j.at("output_dim").get<int>();
    s.alpha = j.at("alpha").get<double>();
    s.output_bias = j.value("output_bias", true);
    s.validate();
    return s;
}

json shape_to_json(const NetworkShape& s) {
    json j;
    j["input_dim"] = s.input_dim;
    j["hidden"] = s.hidden;
    j["output_dim"] = s.output_dim;
    j["alpha"] = s.alpha;
    j["output_bias"] = s.output_bias;
    return j;
}

Matrix matrix_from_json(const json& j) {
    Matrix m(int(j.size()), j.empty() ? 0 : int(j.at(0).size()));
    for (int r = 0; r < m.rows; ++r) {
        const auto& row = j.at(r);
        if (int(row.size()) != m.cols) throw parse_error("ragged matrix rows");
        for (int c = 0; c < m.cols; ++c) m(r, c) = row.at(c).get<double>();
    }
    return m;
}

json matrix_to_json(const Matrix& m) {
    json j = json::array();
    for (int r = 0; r < m.rows; ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols; ++c) row.push_back(m(r, c));
        j.push_back(std::move(row));
    }
    return j;
}

}  // namespace

Params params_from_json(const json& j) {
    Params p = Params::zeros(shape_from_json(j.at("shape")));
    const auto& Ws = j.at("W");
    const auto& bs = j.at("b");
    if (int(Ws.size()) != p.shape.depth() || int(bs.size()) != p.shape.depth())
        throw parse_error("layer count mismatch in params file");
    for (int l = 0; l < p.shape.depth(); ++l) {
        p.W[l] = matrix_from_json(Ws.at(l));
        p.b[l] = bs.at(l).get<Vec>();
    }
    p.V = matrix_from_json(j.at("V"));
    p.c = j.at("c").get<Vec>();
    p.validate();
    return p;
}

json params_to_json(const Params& p) {
    json j;
    j["shape"] = shape_to_json(p.shape);
    json Ws = json::array(), bs = json::array();
    for (int l = 0; l < p.shape.depth(); ++l) {
        Ws.push_back(matrix_to_json(p.W[l]));
        bs.push_back(p.b[l]);
    }
    j["W"] = std::move(Ws);
    j["b"] = std::move(bs);
    j["V"] = matrix_to_json(p.V);
    j["c"] = p.c;
    return j;
}

Params load_params(const std::string& path) { return params_from_json(read_json(path)); }

void save_params(const Params& p, const std::string& path) { write_json(params_to_json(p), path); }

ReplicatedParams replicated_from_json(const json& j) {
    NetworkShape s = shape_from_json(j.at("shape"));
    ReplicatedParams r = ReplicatedParams::zeros(s, j.at("gamma").get<double>());
    const auto& reps = j.at("replicas");
    if (int(reps.size()) != s.output_dim) throw parse_error("replica count mismatch");
    for (int cls = 0; cls < s.output_dim; ++cls) {
        const auto& Ws = reps.at(cls).at("W");
        const auto& bs = reps.at(cls).at("b");
        for (int l = 0; l < s.depth(); ++l) {
            r.W[cls][l] = matrix_from_json(Ws.at(l));
            r.b[cls][l] = bs.at(l).get<Vec>();
        }
    }
    r.V = matrix_from_json(j.at("V"));
    r.c = j.at("c").get<Vec>();
    return r;
}

json replicated_to_json(const ReplicatedParams& r) {
    json j;
    j["shape"] = shape_to_json(r.shape);
    j["gamma"] = r.gamma;
    json reps = json::array();
    for (int cls = 0; cls < r.num_classes(); ++cls) {
        json one;
        json Ws = json::array(), bs = json::array();
        for (int l = 0; l < r.shape.depth(); ++l) {
            Ws.push_back(matrix_to_json(r.W[cls][l]));
            bs.push_back(r.b[cls][l]);
        }
        one["W"] = std::move(Ws);
        one["b"] = std::move(bs);
        reps.push_back(std::move(one));
    }
    j["replicas"] = std::move(reps);
    j["V"] = matrix_to_json(r.V);
    j["c"] = r.c;
    return j;
}

TrainConfig config_from_json(const json& j) {
    TrainConfig c;
    c.mode = j.value("mode", c.mode);
    if (c.mode != "binary" && c.mode != "multiclass" && c.mode != "penalty")
        throw parse_error("mode must be binary, multiclass or penalty");
    c.alpha = j.value("alpha", c.alpha);
    c.hidden = j.value("hidden", c.hidden);
    c.output_bias = j.value("output_bias", c.output_bias);
    if (j.contains("schedule")) {
        const auto& s = j.at("schedule");
        std::string kind = s.value("kind", "inv_sqrt");
        if (kind == "constant")
            c.schedule.kind = Schedule::Kind::Constant;
        else if (kind == "inv_sqrt")
            c.schedule.kind = Schedule::Kind::InvSqrt;
        else
            throw parse_error("schedule kind must be constant or inv_sqrt");
        c.schedule.eta0 = s.value("eta0", c.schedule.eta0);
    }
    c.max_iters = j.value("max_iters", c.max_iters);
    c.check_every = j.value("check_every", c.check_every);
    c.eps_crit = j.value("eps_crit", c.eps_crit);
    c.starts = j.value("starts", c.starts);
    c.init_scale = j.value("init_scale", c.init_scale);
    c.gamma = j.value("gamma", c.gamma);
    c.seed = j.value("seed", c.seed);
    return c;
}

json config_to_json(const TrainConfig& c) {
    json j;
    j["mode"] = c.mode;
    j["alpha"] = c.alpha;
    j["hidden"] = c.hidden;
    j["output_bias"] = c.output_bias;
    j["schedule"] = {{"kind", c.schedule.kind == Schedule::Kind::Constant ? "constant" : "inv_sqrt"},
                     {"eta0", c.schedule.eta0}};
    j["max_iters"] = c.max_iters;
    j["check_every"] = c.check_every;
    j["eps_crit"] = c.eps_crit;
    j["starts"] = c.starts;
    j["init_scale"] = c.init_scale;
    j["gamma"] = c.gamma;
    j["seed"] = c.seed;
    return j;
}

TrainConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    json j = read_json(path);
    for (const std::string& kv : overrides) {
        size_t eq = kv.find('=');
        if (eq == std::string::npos) throw parse_error("override must be key=value: " + kv);
        std::string key = kv.substr(0, eq);
        std::string val = kv.substr(eq + 1);
        std::string ptr = "/" + key;
        for (char& ch : ptr)
            if (ch == '.') ch = '/';
        json parsed;
        try {
            parsed = json::parse(val);
        } catch (const json::exception&) {
            parsed = val;  // plain string
        }
        j[json::json_pointer(ptr)] = parsed;
    }
    return config_from_json(j);
}

std::uint64_t report_digest(const json& j) {
    std::string dump = j.dump();
    Hash64 h;
    std::uint64_t word = 0;
    int bytes = 0;
    for (unsigned char ch : dump) {
        word = (word << 8) | ch;
        if (++bytes == 8) {
            h.add(word);
            word = 0;
            bytes = 0;
        }
    }
    if (bytes > 0) h.add(word);
    h.add(dump.size());
    return h.get();
}

void write_json(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw parse_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw parse_error("invalid JSON in " + path + ": " + e.what());
    }
}

}  // namespace lscape
