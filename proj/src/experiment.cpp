#include "facetell/experiment.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "facetell/csv.hpp"
#include "facetell/error.hpp"
#include "facetell/rng.hpp"

namespace facetell::experiment {

using json = nlohmann::json;
using classifier::UnifiedLabel;

namespace {

// Seed streams, one per independent consumer.
constexpr std::uint64_t kStreamFeatures = 77;
constexpr std::uint64_t kStreamTraining = 99;
constexpr std::uint64_t kStreamPalette = 7919;
constexpr std::uint64_t kStreamSession = 50000;

}  // namespace

classifier::LabelLayout default_layout() {
    return classifier::LabelLayout(
        {6, 6, 6, 8, 2, 1},
        {"Web Applications", "Office Software", "Programming Software", "Multimedia Software", "OS Applications",
         "Video Conferencing"},
        {{"Searching", "News", "Shopping", "Email", "Social", "Sports"},
         {"Word", "Excel", "Visio", "OneNote", "PowerPoint", "Adobe Reader"},
         {"MATLAB", "Visual Studio", "Eclipse", "PyCharm", "Vim", "Notepad"},
         {"Tik Tok", "Disney", "Dts Sound", "Pandora", "Hulu", "Netflix", "iHeartRadio", "Crunchyroll"},
         {"Files Searching", "OS Setting"},
         {"Conferencing"}});
}

scene::CrossSectionLayout default_cross_section() {
    scene::CrossSectionLayout layout;
    layout.points = {{0.0, 0.5, 0.0, -1.0}, {0.0, 0.3, 0.0, -1.0}, {0.1, 0.45, 0.15, -1.0}};
    return layout;
}

ExperimentConfig default_config() {
    ExperimentConfig c;
    c.layout = default_layout();
    c.weights = default_cross_section();
    return c;
}

// ---------------------------------------------------------------------------
// JSON configuration

namespace {

// Reads fields of one JSON object, remembering which keys were consumed so
// that leftovers (typos) can be reported.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw DomainError("config: '" + path_ + "' must be an object");
    }

    template <typename T>
    void get(const char* key, T& field) {
        used_.insert(key);
        if (!j_.contains(key)) return;
        try {
            field = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw DomainError("config: '" + path_ + "." + key + "' has the wrong type");
        }
    }

    void get_vec3(const char* key, Vec3& v) {
        std::array<double, 3> a{v.x, v.y, v.z};
        get(key, a);
        v = {a[0], a[1], a[2]};
    }

    const json* child(const char* key) {
        used_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    std::string path(const char* key) const { return path_ + "." + key; }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!used_.count(key)) throw DomainError("config: unknown key '" + path_ + "." + key + "'");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

void read_scene(const json& j, scene::SceneSpec& s) {
    ObjectReader r(j, "scene");
    if (const json* screen = r.child("screen")) {
        ObjectReader sr(*screen, r.path("screen"));
        sr.get("width", s.screen.width);
        sr.get("height", s.screen.height);
        sr.get("rows", s.screen.rows);
        sr.get("cols", s.screen.cols);
        sr.get("radiance_scale", s.screen.radiance_scale);
        sr.get_vec3("center", s.screen.placement.center);
        sr.get_vec3("normal", s.screen.placement.normal);
        sr.get_vec3("up", s.screen.placement.up);
        sr.finish();
    }
    if (const json* face = r.child("face")) {
        ObjectReader fr(*face, r.path("face"));
        fr.get_vec3("center", s.face.center);
        fr.get_vec3("semi_axes", s.face.semi_axes);
        fr.get("cols", s.face.cols);
        fr.get("rows", s.face.rows);
        fr.get("half_width_angle", s.face.half_width_angle);
        fr.get("half_height_angle", s.face.half_height_angle);
        fr.get("k_d", s.face.coeffs.k_d);
        fr.get("k_s", s.face.coeffs.k_s);
        fr.get("k_a", s.face.coeffs.k_a);
        fr.get("n_s", s.face.coeffs.n_s);
        fr.finish();
    }
    r.get_vec3("camera", s.camera);
    if (const json* optics = r.child("optics")) {
        ObjectReader orr(*optics, r.path("optics"));
        orr.get("g", s.optics.g);
        orr.get("ambient", s.optics.ambient);
        orr.finish();
    }
    if (const json* exposure = r.child("exposure")) {
        if (exposure->is_string() && exposure->get<std::string>() == "auto") {
            s.exposure.reset();
        } else if (exposure->is_number()) {
            s.exposure = exposure->get<double>();
        } else {
            throw DomainError("config: 'scene.exposure' must be \"auto\" or a number");
        }
    }
    r.finish();
}

classifier::LabelLayout read_layout(const json& j) {
    if (!j.is_array() || j.empty()) throw DomainError("config: 'layout' must be a non-empty array");
    std::vector<int> counts;
    std::vector<std::string> names;
    std::vector<std::vector<std::string>> apps;
    for (std::size_t i = 0; i < j.size(); ++i) {
        ObjectReader r(j[i], "layout[" + std::to_string(i) + "]");
        std::string name = "category" + std::to_string(i);
        std::vector<std::string> app_names;
        r.get("name", name);
        r.get("apps", app_names);
        r.finish();
        counts.push_back(static_cast<int>(app_names.size()));
        names.push_back(name);
        apps.push_back(app_names);
    }
    return classifier::LabelLayout(counts, names, apps);
}

void read_weights(const json& j, scene::CrossSectionLayout& w) {
    ObjectReader r(j, "weights");
    r.get("screen_x0", w.screen_x0);
    r.get("screen_x1", w.screen_x1);
    r.get("units", w.units);
    r.get("camera_x", w.camera_x);
    r.get("g", w.g);
    r.get("n_s", w.n_s);
    if (const json* points = r.child("points")) {
        if (!points->is_array()) throw DomainError("config: 'weights.points' must be an array");
        w.points.clear();
        for (std::size_t i = 0; i < points->size(); ++i) {
            ObjectReader pr((*points)[i], "weights.points[" + std::to_string(i) + "]");
            scene::CrossSectionPoint p;
            std::array<double, 2> n{p.normal_x, p.normal_y};
            pr.get("x", p.x);
            pr.get("y", p.y);
            pr.get("normal", n);
            pr.finish();
            p.normal_x = n[0];
            p.normal_y = n[1];
            w.points.push_back(p);
        }
    }
    r.finish();
}

json vec3_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DomainError(std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig c = default_config();
    ObjectReader r(doc, "config");
    r.get("seed", c.seed);
    if (const json* s = r.child("scene")) read_scene(*s, c.scene);
    if (const json* l = r.child("layout")) c.layout = read_layout(*l);
    if (const json* n = r.child("noise")) {
        ObjectReader nr(*n, "noise");
        nr.get("pixel_sigma", c.noise.pixel_sigma);
        nr.get("ambient_jitter", c.noise.ambient_jitter);
        nr.get("brightness_jitter", c.noise.brightness_jitter);
        nr.get("face_offset", c.noise.face_offset);
        nr.get("face_scale", c.noise.face_scale);
        nr.finish();
    }
    if (const json* d = r.child("dataset")) {
        ObjectReader dr(*d, "dataset");
        dr.get("frames_per_app", c.dataset.frames_per_app);
        dr.get("train_sessions", c.dataset.train_sessions);
        dr.get("test_sessions", c.dataset.test_sessions);
        dr.get("timestep", c.dataset.timestep);
        dr.get("content_width", c.dataset.content_width);
        dr.get("content_height", c.dataset.content_height);
        dr.finish();
    }
    if (const json* h = r.child("hlc")) {
        ObjectReader hr(*h, "hlc");
        hr.get("sigma_s", c.hlc.sigma_s);
        hr.get("T_s", c.hlc.t_s);
        hr.get("sigma_e", c.hlc.sigma_e);
        hr.get("T_e", c.hlc.t_e);
        hr.finish();
    }
    if (const json* t = r.child("training")) {
        ObjectReader tr(*t, "training");
        tr.get("epochs", c.training.epochs);
        tr.get("batch", c.training.batch);
        tr.get("lr", c.training.lr);
        tr.get("l_size", c.training.preprocess.size);
        tr.get("grid", c.training.preprocess.grid);
        tr.finish();
    }
    if (const json* w = r.child("weights")) read_weights(*w, c.weights);
    if (const json* m = r.child("mdc")) {
        ObjectReader mr(*m, "mdc");
        mr.get("fractions", c.mdc.fractions);
        mr.get("noise_sigma", c.mdc.noise_sigma);
        mr.get("content_width", c.mdc.content_width);
        mr.get("content_height", c.mdc.content_height);
        mr.finish();
    }
    r.finish();
    validate(c);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str());
}

std::string config_to_json(const ExperimentConfig& c) {
    json layout = json::array();
    for (int j = 0; j < c.layout.categories(); ++j) {
        layout.push_back({{"name", c.layout.category_name(j)}, {"apps", c.layout.app_names()[static_cast<std::size_t>(j)]}});
    }
    json points = json::array();
    for (const auto& p : c.weights.points) {
        points.push_back({{"x", p.x}, {"y", p.y}, {"normal", {p.normal_x, p.normal_y}}});
    }
    const auto& s = c.scene;
    const json doc{
        {"seed", c.seed},
        {"scene",
         {{"screen",
           {{"width", s.screen.width},
            {"height", s.screen.height},
            {"rows", s.screen.rows},
            {"cols", s.screen.cols},
            {"radiance_scale", s.screen.radiance_scale},
            {"center", vec3_json(s.screen.placement.center)},
            {"normal", vec3_json(s.screen.placement.normal)},
            {"up", vec3_json(s.screen.placement.up)}}},
          {"face",
           {{"center", vec3_json(s.face.center)},
            {"semi_axes", vec3_json(s.face.semi_axes)},
            {"cols", s.face.cols},
            {"rows", s.face.rows},
            {"half_width_angle", s.face.half_width_angle},
            {"half_height_angle", s.face.half_height_angle},
            {"k_d", s.face.coeffs.k_d},
            {"k_s", s.face.coeffs.k_s},
            {"k_a", s.face.coeffs.k_a},
            {"n_s", s.face.coeffs.n_s}}},
          {"camera", vec3_json(s.camera)},
          {"optics", {{"g", s.optics.g}, {"ambient", s.optics.ambient}}},
          {"exposure", s.exposure ? json(*s.exposure) : json("auto")}}},
        {"layout", layout},
        {"noise",
         {{"pixel_sigma", c.noise.pixel_sigma},
          {"ambient_jitter", c.noise.ambient_jitter},
          {"brightness_jitter", c.noise.brightness_jitter},
          {"face_offset", c.noise.face_offset},
          {"face_scale", c.noise.face_scale}}},
        {"dataset",
         {{"frames_per_app", c.dataset.frames_per_app},
          {"train_sessions", c.dataset.train_sessions},
          {"test_sessions", c.dataset.test_sessions},
          {"timestep", c.dataset.timestep},
          {"content_width", c.dataset.content_width},
          {"content_height", c.dataset.content_height}}},
        {"hlc", {{"sigma_s", c.hlc.sigma_s}, {"T_s", c.hlc.t_s}, {"sigma_e", c.hlc.sigma_e}, {"T_e", c.hlc.t_e}}},
        {"training",
         {{"epochs", c.training.epochs},
          {"batch", c.training.batch},
          {"lr", c.training.lr},
          {"l_size", c.training.preprocess.size},
          {"grid", c.training.preprocess.grid}}},
        {"weights",
         {{"screen_x0", c.weights.screen_x0},
          {"screen_x1", c.weights.screen_x1},
          {"units", c.weights.units},
          {"camera_x", c.weights.camera_x},
          {"g", c.weights.g},
          {"n_s", c.weights.n_s},
          {"points", points}}},
        {"mdc",
         {{"fractions", c.mdc.fractions},
          {"noise_sigma", c.mdc.noise_sigma},
          {"content_width", c.mdc.content_width},
          {"content_height", c.mdc.content_height}}}};
    return doc.dump(2) + "\n";
}

void validate(const ExperimentConfig& c) {
    hlc::validate(c.hlc);
    optics::validate(c.scene.optics);
    if (c.scene.exposure && !(*c.scene.exposure > 0.0)) throw DomainError("config: exposure must be > 0");
    if (c.scene.screen.rows > c.dataset.content_height || c.scene.screen.cols > c.dataset.content_width) {
        throw DomainError("config: screen grid exceeds the dataset content resolution");
    }
    if (c.dataset.frames_per_app < 1) throw DomainError("config: frames_per_app must be >= 1");
    if (c.dataset.train_sessions < 0 || c.dataset.test_sessions < 0) {
        throw DomainError("config: session counts must be >= 0");
    }
    if (!(c.dataset.timestep > 0.0)) throw DomainError("config: timestep must be > 0");
    const auto& n = c.noise;
    if (!(n.pixel_sigma >= 0.0 && n.ambient_jitter >= 0.0 && n.ambient_jitter < 1.0 && n.brightness_jitter >= 0.0 &&
          n.brightness_jitter < 1.0 && n.face_offset >= 0.0 && n.face_scale >= 0.0 && n.face_scale < 1.0)) {
        throw DomainError("config: noise parameters out of range");
    }
    if (c.training.epochs < 0 || c.training.batch < 1 || !(c.training.lr > 0.0)) {
        throw DomainError("config: training needs epochs >= 0, batch >= 1, lr > 0");
    }
    if (c.training.preprocess.size < 1 || c.training.preprocess.grid < 1 ||
        c.training.preprocess.grid > c.training.preprocess.size) {
        throw DomainError("config: need 1 <= grid <= l_size");
    }
    for (double f : c.mdc.fractions) {
        if (!(f > 0.0 && f <= 1.0)) throw DomainError("config: MDC fractions must lie in (0, 1]");
    }
}

// ---------------------------------------------------------------------------
// Synthetic application palettes

namespace {

using Color = std::array<std::uint8_t, 3>;

constexpr std::array<Color, 14> kColors{{
    {255, 255, 255}, {255, 0, 0},   {0, 255, 0},   {0, 0, 255},   {255, 255, 0},
    {0, 255, 255},   {255, 0, 255}, {255, 128, 0}, {128, 0, 255}, {0, 255, 128},
    {255, 0, 128},   {128, 255, 0}, {0, 128, 255}, {0, 0, 0},
}};

constexpr int kLayoutKinds = 9;
constexpr std::array<int, kLayoutKinds> kColorsPerKind{2, 2, 2, 3, 3, 4, 2, 2, 2};

struct PaletteDesign {
    int kind = 0;
    std::vector<int> colors;
    friend bool operator<(const PaletteDesign& a, const PaletteDesign& b) {
        return std::tie(a.kind, a.colors) < std::tie(b.kind, b.colors);
    }
};

PaletteDesign design_for(int label_index, std::uint64_t seed, std::set<PaletteDesign>& taken) {
    const int kind = label_index % kLayoutKinds;
    Rng rng(Rng::derive(seed, kStreamPalette + static_cast<std::uint64_t>(label_index)));
    while (true) {
        std::vector<int> pool(kColors.size());
        for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = static_cast<int>(i);
        rng.shuffle(std::span<int>(pool));
        PaletteDesign d{kind, std::vector<int>(pool.begin(), pool.begin() + kColorsPerKind[kind])};
        if (taken.insert(d).second) return d;
    }
}

void fill(FaceImage& img, int x0, int y0, int x1, int y1, const Color& c) {
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
            for (int ch = 0; ch < 3; ++ch) img.at(y, x, ch) = c[ch];
        }
    }
}

}  // namespace

FaceImage app_palette(int label_index, std::uint64_t seed, int width, int height) {
    if (label_index < 0) throw DomainError("palette needs a known label");
    if (width < 4 || height < 4) throw DomainError("palette content must be at least 4x4");
    std::set<PaletteDesign> taken;
    PaletteDesign d;
    for (int i = 0; i <= label_index; ++i) d = design_for(i, seed, taken);

    auto col = [&](int i) { return kColors[static_cast<std::size_t>(d.colors[static_cast<std::size_t>(i)])]; };
    FaceImage img(width, height);
    const int w = width, h = height;
    switch (d.kind) {
        case 0:
            fill(img, 0, 0, w, h - h / 5, col(0));
            fill(img, 0, h - h / 5, w, h, col(1));
            break;
        case 1:
            fill(img, 0, 0, w / 2, h, col(0));
            fill(img, w / 2, 0, w, h, col(1));
            break;
        case 2:
            fill(img, 0, 0, w, h / 2, col(0));
            fill(img, 0, h / 2, w, h, col(1));
            break;
        case 3:
            for (int i = 0; i < 3; ++i) fill(img, i * w / 3, 0, (i + 1) * w / 3, h, col(i));
            break;
        case 4:
            for (int i = 0; i < 3; ++i) fill(img, 0, i * h / 3, w, (i + 1) * h / 3, col(i));
            break;
        case 5:
            fill(img, 0, 0, w / 2, h / 2, col(0));
            fill(img, w / 2, 0, w, h / 2, col(1));
            fill(img, 0, h / 2, w / 2, h, col(2));
            fill(img, w / 2, h / 2, w, h, col(3));
            break;
        case 6:
            fill(img, 0, 0, w, h, col(0));
            fill(img, w / 4, h / 4, w - w / 4, h - h / 4, col(1));
            break;
        case 7:
            fill(img, 0, 0, w * 3 / 10, h, col(0));
            fill(img, w * 3 / 10, 0, w, h, col(1));
            break;
        default:
            fill(img, 0, 0, w, h / 4, col(0));
            fill(img, 0, h / 4, w, h, col(1));
            break;
    }
    return img;
}

// ---------------------------------------------------------------------------
// Dataset generation

std::vector<Frame> generate_dataset(const ExperimentConfig& config) {
    validate(config);
    const auto& layout = config.layout;
    const int apps = layout.total();
    const int sessions = config.dataset.train_sessions + config.dataset.test_sessions;

    std::vector<scene::ScreenModel> screens;
    for (int a = 0; a < apps; ++a) {
        screens.push_back(scene::screen_from_image(
            app_palette(a, config.seed, config.dataset.content_width, config.dataset.content_height),
            config.scene.screen));
    }

    std::vector<Frame> frames;
    frames.reserve(static_cast<std::size_t>(sessions) * apps * config.dataset.frames_per_app);
    for (int s = 0; s < sessions; ++s) {
        Rng rng(Rng::derive(config.seed, kStreamSession + static_cast<std::uint64_t>(s)));
        const auto& noise = config.noise;

        scene::FaceSpec face = config.scene.face;
        face.center += Vec3{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)} * noise.face_offset;
        face.semi_axes = {face.semi_axes.x * (1.0 + noise.face_scale * rng.uniform(-1.0, 1.0)),
                          face.semi_axes.y * (1.0 + noise.face_scale * rng.uniform(-1.0, 1.0)),
                          face.semi_axes.z * (1.0 + noise.face_scale * rng.uniform(-1.0, 1.0))};

        scene::Scene sc;
        sc.screen = screens.front();
        sc.face = scene::build_face(face);
        sc.camera = config.scene.camera;
        sc.optics = config.scene.optics;
        sc.exposure = config.scene.exposure;
        const auto transport = scene::build_transport(sc);

        std::vector<int> order(static_cast<std::size_t>(apps));
        for (int a = 0; a < apps; ++a) order[static_cast<std::size_t>(a)] = a;
        rng.shuffle(std::span<int>(order));

        const Split split = s < config.dataset.train_sessions ? Split::Train : Split::Test;
        int t = 0;
        for (int app : order) {
            const auto& units = screens[static_cast<std::size_t>(app)].units;
            for (int f = 0; f < config.dataset.frames_per_app; ++f, ++t) {
                const double brightness = 1.0 + noise.brightness_jitter * rng.uniform(-1.0, 1.0);
                const double ambient = 1.0 + noise.ambient_jitter * rng.uniform(-1.0, 1.0);
                const auto radiance = scene::apply_transport(transport, units, brightness, ambient);
                const double exposure = scene::resolve_exposure(radiance, sc.exposure);
                Frame frame;
                frame.image = FaceImage(radiance.width, radiance.height);
                for (std::size_t i = 0; i < radiance.values.size(); ++i) {
                    for (int c = 0; c < 3; ++c) {
                        frame.image.pixels[i * 3 + c] =
                            quantize(exposure * radiance.values[i][c] + noise.pixel_sigma * rng.normal());
                    }
                }
                frame.label = UnifiedLabel{app};
                frame.sequence = s;
                frame.t = t;
                frame.split = split;
                frames.push_back(std::move(frame));
            }
        }
    }
    return frames;
}

namespace {

std::string frame_file_name(const Frame& f) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "frames/s%03d_t%05d.ppm", f.sequence, f.t);
    return buf;
}

const char* split_name(Split s) { return s == Split::Train ? "train" : "test"; }

}  // namespace

void write_dataset(const std::filesystem::path& dir, const std::vector<Frame>& frames,
                   const classifier::LabelLayout& layout) {
    std::error_code ec;
    std::filesystem::create_directories(dir / "frames", ec);
    if (ec) throw IoError("cannot create " + (dir / "frames").string() + ": " + ec.message());
    std::ofstream manifest(dir / "manifest.csv", std::ios::binary);
    if (!manifest) throw IoError("cannot write " + (dir / "manifest.csv").string());
    manifest << "file,label_index,category,app,sequence_id,t,split\n";
    for (const auto& f : frames) {
        const auto name = frame_file_name(f);
        write_ppm(dir / name, f.image);
        const auto ca = classifier::split_label(f.label, layout);
        manifest << name << ',' << f.label.index << ',' << ca.category << ',' << ca.app << ',' << f.sequence << ','
                 << f.t << ',' << split_name(f.split) << '\n';
    }
    if (!manifest) throw IoError("failed writing manifest");
}

std::vector<ManifestRow> read_manifest(const std::filesystem::path& dir) {
    const auto table = csv::read(dir / "manifest.csv");
    const auto file = table.column("file");
    const auto label = table.column("label_index");
    const auto seq = table.column("sequence_id");
    const auto t = table.column("t");
    const auto split = table.column("split");
    std::vector<ManifestRow> rows;
    for (const auto& r : table.rows) {
        ManifestRow row;
        row.file = dir / r[file];
        row.label = UnifiedLabel{static_cast<int>(csv::to_int(r[label]))};
        row.sequence = static_cast<int>(csv::to_int(r[seq]));
        row.t = static_cast<int>(csv::to_int(r[t]));
        if (r[split] == "train") {
            row.split = Split::Train;
        } else if (r[split] == "test") {
            row.split = Split::Test;
        } else {
            throw IoError("manifest split must be 'train' or 'test', got '" + r[split] + "'");
        }
        rows.push_back(row);
    }
    return rows;
}

features::FeatureParams feature_params_for(const ExperimentConfig& config) {
    return features::random_feature_params(Rng::derive(config.seed, kStreamFeatures));
}

std::vector<classifier::LabeledFeatures> compute_features(const std::vector<Frame>& frames, Split split,
                                                          const features::FeatureParams& params,
                                                          const features::PreprocessConfig& preprocess) {
    std::vector<classifier::LabeledFeatures> out;
    for (const auto& f : frames) {
        if (f.split != split) continue;
        out.push_back({features::extract_features(f.image, params, preprocess), f.label});
    }
    return out;
}

classifier::TrainResult train_model(const ExperimentConfig& config,
                                    std::span<const classifier::LabeledFeatures> samples) {
    const classifier::TrainConfig tc{config.training.epochs, config.training.batch, config.training.lr,
                                     Rng::derive(config.seed, kStreamTraining)};
    return classifier::train_two_tier(samples, config.layout, feature_params_for(config), config.training.preprocess,
                                      tc);
}

std::vector<const Frame*> sequence_frames(const std::vector<Frame>& frames, int sequence) {
    std::vector<const Frame*> out;
    for (const auto& f : frames) {
        if (f.sequence == sequence) out.push_back(&f);
    }
    std::stable_sort(out.begin(), out.end(), [](const Frame* a, const Frame* b) { return a->t < b->t; });
    return out;
}

AttackResult attack(const classifier::TwoTierModel& model, std::span<const FaceImage* const> frames,
                    std::span<const UnifiedLabel> truth, const hlc::HlcParams& params) {
    if (frames.empty()) throw DomainError("no frames to attack");
    if (!truth.empty() && truth.size() != frames.size()) throw DomainError("truth length does not match frames");
    for (const auto& label : truth) {
        if (label.known() && label.index >= model.layout.total()) {
            throw DomainError("truth label " + std::to_string(label.index) + " is outside the model's layout");
        }
    }
    AttackResult r;
    r.predicted.reserve(frames.size());
    for (const FaceImage* f : frames) r.predicted.push_back(classifier::predict(model, *f).label);
    r.corrected = hlc::correct_labels(r.predicted, params);
    if (!truth.empty()) {
        r.truth.assign(truth.begin(), truth.end());
        r.accuracy_raw = classifier::accuracy(r.predicted, r.truth);
        r.accuracy_corrected = classifier::accuracy(r.corrected, r.truth);
    }
    return r;
}

void write_loss_log(std::ostream& out, std::span<const classifier::LossRecord> losses) {
    out << "head,epoch,batch,loss\n";
    for (const auto& l : losses) out << l.head << ',' << l.epoch << ',' << l.batch << ',' << csv::format(l.loss) << '\n';
}

analysis::MdcOptions mdc_options(const ExperimentConfig& config) {
    analysis::MdcOptions o;
    o.fractions = config.mdc.fractions;
    o.noise_sigma = config.mdc.noise_sigma;
    o.content_width = config.mdc.content_width;
    o.content_height = config.mdc.content_height;
    o.seed = config.seed;
    return o;
}

}  // namespace facetell::experiment
