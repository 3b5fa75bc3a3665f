#!/usr/bin/env python3
"""Regenerates the bundled schema, config and fixture data under data/.

The output is committed; rerun only when the fixture design changes.
"""
import json
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent / "data"

SURVEY_FIELDS = [
    "Fiber Optic", "Copper Links", "Inter-site Radio Link", "Internet Speed", "Adequate Speed",
    "Internet Redundancy", "Proprietary Infrastructure", "Available 4G Coverage", "Available 5G Coverage",
    "Municipal Fiber Availability", "Interconnection", "Data Processing Center (DPC)", "DPC Utilization",
    "Firewall", "Antivirus Software", "Antispam System", "Denial of Service System", "Attacks", "Theft",
    "Delegate Authority", "Office Management", "Databases", "Employee Portal", "Document Management",
    "Accounting Management", "Electronic Signature", "Human Resources Management", "Control and Monitoring",
    "Municipal Asset Management", "Population Register Management", "Grant Management",
    "Geographic Information System (GIS)", "Library", "Emergency Services", "Local Police",
    "Traffic Management", "Vehicles", "Transportation", "Street Vendors", "Markets", "Funeral Activities",
    "Sports", "Culture", "Education", "Gender-Based Violence", "Buildings", "Construction Licenses",
    "Road Incidents", "Social Services", "Average Years", "Renewals", "Electronic Portal", "Website",
    "Administrative Resources", "Smart City Plan", "Smart City Platform", "Smart City Commission",
    "Smart City Funding", "RECI Membership", "Tourism Plan", "Smart Tourism Platform",
    "Smart Tourist Destination (STD) Components", "STD Alliances", "Municipal Plans", "Experience",
    "Citizen Digitalization", "Citizen Digital Literacy",
]
KPI_FIELDS = [
    "Energy Efficiency Systems", "Citizen Participation Tools", "Smart Irrigation",
    "Online Tourism Indicators", "Public Wi-Fi", "Digital Guided Tours",
]
FIELDS = SURVEY_FIELDS + KPI_FIELDS
assert len(SURVEY_FIELDS) == 67 and len(FIELDS) == 73

MAPPING = {
    "Communication Infrastructure": FIELDS[0:11],
    "ICT Equipment": FIELDS[11:19] + ["Average Years", "Renewals"],
    "Backoffice": FIELDS[19:32] + ["Administrative Resources"],
    "Digital Services": FIELDS[32:49] + ["Electronic Portal", "Website", "Citizen Digitalization",
                                         "Citizen Digital Literacy"],
    "Strategic Planning": ["Municipal Plans", "Experience"],
    "Smart Cities": ["Smart City Plan", "Smart City Platform", "Smart City Commission", "Smart City Funding",
                     "RECI Membership", "Energy Efficiency Systems", "Citizen Participation Tools",
                     "Smart Irrigation"],
    "Smart Tourism Destination": ["Tourism Plan", "Smart Tourism Platform",
                                  "Smart Tourist Destination (STD) Components", "STD Alliances",
                                  "Online Tourism Indicators", "Public Wi-Fi", "Digital Guided Tours"],
}
assert sorted(f for fs in MAPPING.values() for f in fs) == sorted(FIELDS)

WEIGHTS = {
    "core_share": 0.7,
    "context_share": 0.3,
    "core_weights": {"Communication Infrastructure": 0.1, "Backoffice": 0.1, "ICT Equipment": 0.2,
                     "Digital Services": 0.2, "Strategic Planning": 0.1},
    "context_weights": {"Smart Cities": 0.2, "Smart Tourism Destination": 0.1},
}

SENSORS = {
    "TrafficMobility": ["Traffic Management", "Vehicles", "Transportation", "Road Incidents"],
    "RiskSafety": ["Emergency Services", "Local Police"],
    "EnvironmentalHealth": ["Smart Irrigation", "Municipal Plans"],
    "EnergyManagement": ["Energy Efficiency Systems", "Buildings", "Municipal Asset Management"],
    "WasteCleanliness": ["Street Vendors", "Markets", "Control and Monitoring"],
}

# (name, group, field, predicate, polarity, fixture count of 79 satisfying the predicate)
KPIS = [
    ("No Smart City master plan", "Smart City", "Smart City Plan", "=0", "absence", 63),
    ("No Smart City platform", "Smart City", "Smart City Platform", "=0", "absence", 71),
    ("Energy efficiency systems", "Smart City", "Energy Efficiency Systems", ">=1", "presence", 62),
    ("Citizen participation tools", "Smart City", "Citizen Participation Tools", ">=1", "presence", 42),
    ("Smart irrigation in green areas", "Smart City", "Smart Irrigation", ">=1", "presence", 17),
    ("Online tourism indicators", "Smart Tourist Destination", "Online Tourism Indicators", ">=1", "presence", 22),
    ("Public Wi-Fi", "Smart Tourist Destination", "Public Wi-Fi", ">=1", "presence", 20),
    ("Digital guided tours", "Smart Tourist Destination", "Digital Guided Tours", ">=1", "presence", 16),
    ("No STD strategic plan", "Smart Tourist Destination", "Tourism Plan", "=0", "absence", 60),
    ("No STD platform", "Smart Tourist Destination", "Smart Tourism Platform", "=0", "absence", 64),
]

N_ORGS = 79
N_SITES = 30
PREFIXES = ["Ben", "Alm", "Tor", "Vil", "Cas", "Mon", "Rib", "Alc", "Puz", "Olm"]
SUFFIXES = ["afar", "enara", "ralba", "emira", "ossa", "tella", "aire", "oneda"]
STRATA = ["lt5k", "5k-20k", "20k-50k", "gt50k"]

STOPWORDS = """
a al algo algunas algunos ante antes como con contra cual cuando de del desde donde durante e el ella ellas
ellos en entre era es esa esas ese eso esos esta estas este esto estos fue ha hay la las le les lo los mas me
mi mis mucho muy nada ni no nos o os otra otro para pero poco por porque que quien se ser si sin sobre su sus
tambien tan te tiene todo todos tu un una uno unos y ya el la els les i amb per des dels al als una un
""".split()


def org_names():
    names = [p + s for s in SUFFIXES for p in PREFIXES]
    return names[:N_ORGS]


def demonyms(name):
    stem = name.lower().rstrip("aeiou")
    return [stem + "ense", stem + "ero"]


def engineered_column(rng, maturity, count, high_is_true=True):
    """Marks exactly `count` orgs, favoring high (or low) maturity."""
    order = sorted(range(N_ORGS), key=lambda i: maturity[i] + rng.gauss(0, 0.15), reverse=high_is_true)
    chosen = set(order[:count])
    return [i in chosen for i in range(N_ORGS)]


def build_surveys(rng, maturity):
    rows = []
    for i in range(N_ORGS):
        row = {}
        for f in FIELDS:
            v = round(maturity[i] * 4 + rng.gauss(0, 0.8))
            row[f] = min(4, max(0, v))
        rows.append(row)
    for name, _group, field, pred, _pol, count in KPIS:
        if pred == "=0":
            flags = engineered_column(rng, maturity, count, high_is_true=False)
            for i in range(N_ORGS):
                rows[i][field] = 0 if flags[i] else max(1, rows[i][field])
        else:
            flags = engineered_column(rng, maturity, count)
            for i in range(N_ORGS):
                rows[i][field] = max(1, rows[i][field]) if flags[i] else 0
    # a few explicitly missing cells, never in KPI fields
    kpi_fields = {k[2] for k in KPIS}
    candidates = [f for f in FIELDS if f not in kpi_fields]
    for _ in range(6):
        rows[rng.randrange(N_ORGS)][rng.choice(candidates)] = None
    return rows


def csv_cell(s):
    s = str(s)
    if any(c in s for c in ',"\n'):
        return '"' + s.replace('"', '""') + '"'
    return s


def write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(text.encode("utf-8"))


ACCENTED = {"a": "à", "e": "é", "o": "ó", "i": "í", "u": "ú"}


def accent_variant(rng, name):
    chars = list(name)
    idx = [k for k, c in enumerate(chars) if c in ACCENTED]
    if idx:
        k = rng.choice(idx)
        chars[k] = ACCENTED[chars[k]]
    out = "".join(chars)
    return out.upper() if rng.random() < 0.2 else out


FILLER = [
    "El ayuntamiento informa a la ciudadan&iacute;a sobre el horario de atenci&oacute;n al p&uacute;blico.",
    "Consulte la agenda cultural del mes y las actividades deportivas en el polideportivo municipal.",
    "La biblioteca municipal amplía su horario durante el periodo de exámenes.",
    "Bando de la alcaldía sobre la limpieza de solares y la recogida de enseres.",
    "Información sobre el padrón municipal y el certificado de empadronamiento.",
    "Se abre el plazo de inscripción para la escuela de verano y los talleres de la tercera edad.",
    "El pleno aprobó el presupuesto y la ordenanza fiscal para el próximo ejercicio.",
    "Fiestas patronales: programa de actos, procesión y concierto en la plaza mayor.",
]

SIGNALS = [
    ("Electronic Portal", "La sede electrónica permite realizar trámites en línea con certificado digital las 24 horas."),
    ("Electronic Signature", "Los vecinos pueden firmar electrónicamente solicitudes y registros desde casa."),
    ("Smart City Plan", "El plan director smart city define sensores, datos abiertos y gobernanza digital."),
    ("Smart City Platform", "La plataforma smart city integra los datos de tráfico, alumbrado y residuos."),
    ("Energy Efficiency Systems", "El alumbrado público LED con telegestión reduce el consumo energético."),
    ("Citizen Participation Tools", "Participa en los presupuestos participativos a través de la aplicación móvil."),
    ("Smart Irrigation", "El riego inteligente de parques y jardines usa sondas de humedad."),
    ("Public Wi-Fi", "Wifi público gratuito disponible en plazas, biblioteca y edificios municipales."),
    ("Digital Guided Tours", "Descarga las visitas guiadas digitales con audioguía y códigos QR."),
    ("Online Tourism Indicators", "Indicadores turísticos en línea: ocupación hotelera y visitantes en tiempo real."),
    ("Tourism Plan", "El plan estratégico de destino turístico inteligente se revisa cada año."),
    ("Citizen Digital Literacy", "Cursos de alfabetización digital para mayores en el centro social."),
    ("Traffic Management", "Cámaras y paneles informan del estado del tráfico y del aparcamiento."),
    ("Geographic Information System (GIS)", "El visor cartográfico GIS muestra el planeamiento urbanístico."),
]


def paragraph(rng, row, name, count):
    parts = []
    for field, sentence in SIGNALS:
        v = row[field]
        if v is not None and v >= 2 and rng.random() < 0.35 + 0.15 * v:
            parts.append(sentence)
    parts += rng.sample(FILLER, 2)
    rng.shuffle(parts)
    parts = parts[:count]
    if rng.random() < 0.7:
        parts.append(f"Bienvenidos a {accent_variant(rng, name)}, tierra de gente {demonyms(name)[0]}.")
    return " ".join(parts)


def page(title, body, links):
    link_html = "\n".join(f'    <li><a href="{href}">{text}</a></li>' for href, text in links)
    return f"""<!DOCTYPE html>
<html lang="es">
<head>
  <meta charset="utf-8">
  <title>{title}</title>
  <style>body {{ font-family: sans-serif; }} .hidden {{ display: none; }}</style>
  <script>var analytics = "<p>not text</p>"; window.track && track();</script>
</head>
<body>
  <nav>
  <ul>
{link_html}
  </ul>
  </nav>
  <main>
  {body}
  </main>
  <footer><p>&copy; Ajuntament &middot; Avís legal &nbsp;|&nbsp; Contacto: info@example.org</p></footer>
</body>
</html>
"""


def build_site(rng, root, slug, name, row, with_subdomain):
    host = f"www.{slug}.es"
    base = root / host
    write(base / "robots.txt", "User-agent: *\nDisallow: /privado/\n\nUser-agent: BadBot\nDisallow: /\n")
    nav = [
        ("/", "Inicio"),
        ("servicios.html", "Servicios"),
        ("turismo/", "Turismo"),
        ("noticias.html?page=1#top", "Noticias"),
        ("/privado/", "Intranet"),
        ("/img/logo.png", "Logo"),
        (f"https://twitter.com/{slug}", "Twitter"),
        ("mailto:info@example.org", "Correo"),
    ]
    if with_subdomain:
        nav.append((f"http://agenda.{slug}.es/", "Agenda"))
    write(base / "index.html", page(f"Ajuntament de {name}",
                                    f"<h1>Ajuntament de {name}</h1>\n  <p>{paragraph(rng, row, name, 4)}</p>"
                                    f"\n  <p>Visite https://www.{slug}.es/sede para mas informacion.</p>", nav))
    write(base / "servicios.html", page("Servicios", f"<h2>Servicios municipales</h2><p>{paragraph(rng, row, name, 3)}</p>",
                                        [("index.html", "Inicio"), ("tramites.html", "Tramites")]))
    write(base / "tramites.html", page("Tramites", f"<p>{paragraph(rng, row, name, 3)}</p>",
                                       [("archivo.html", "Archivo"), ("servicios.html", "Servicios")]))
    write(base / "archivo.html", page("Archivo", "<p>Documento historico fuera de profundidad.</p>", []))
    write(base / "turismo" / "index.html",
          page("Turismo", f"<h2>Turismo en {name}</h2><p>{paragraph(rng, row, name, 3)}</p>",
               [("../servicios.html", "Servicios"), ("agenda.html", "Agenda")]))
    write(base / "turismo" / "agenda.html", page("Agenda", f"<p>{paragraph(rng, row, name, 2)}</p>", []))
    write(base / "noticias.html",
          page("Noticias", "<article><h3>Novedades</h3><p>Inauguraci&oacute;n del nuevo espacio "
                           "&#8220;coworking&#8221; en el centro &#x2014; abierto a todos &amp; gratuito.</p>"
                           f"<p>{paragraph(rng, row, name, 2)}</p></article>", [("index.html", "Inicio")]))
    write(base / "privado" / "index.html", page("Intranet", "<p>Contenido interno que no debe rastrearse.</p>", []))
    (base / "img").mkdir(parents=True, exist_ok=True)
    (base / "img" / "logo.png").write_bytes(b"\x89PNG\r\n\x1a\n" + bytes(range(64)))
    if with_subdomain:
        sub = root / f"agenda.{slug}.es"
        write(sub / "index.html", page("Agenda", f"<p>{paragraph(rng, row, name, 2)}</p>", [("/", "Agenda")]))


def main():
    rng = random.Random(20240607)
    names = org_names()
    ids = [f"M{i + 1:03d}" for i in range(N_ORGS)]
    maturity = [min(0.95, max(0.05, rng.betavariate(2.2, 3.0))) for _ in range(N_ORGS)]
    rows = build_surveys(rng, maturity)

    schema = ["# Survey fields, in feature-vector order. Values are ordinal 0..4.",
              "# The last six fields are reconstructed dashboard indicators."] + FIELDS
    write(ROOT / "schema.txt", "\n".join(schema) + "\n")
    write(ROOT / "stopwords_es.txt", "# Spanish/Valencian function words\n" + "\n".join(sorted(set(STOPWORDS))) + "\n")

    fx = ROOT / "fixtures"
    lines = [",".join(["org_id", "year", "population_stratum"] + [csv_cell(f) for f in FIELDS])]
    for i in range(N_ORGS):
        cells = [ids[i], "2022", rng.choice(STRATA)] + ["" if rows[i][f] is None else str(rows[i][f]) for f in FIELDS]
        lines.append(",".join(cells))
    write(fx / "surveys.csv", "\n".join(lines) + "\n")

    gaz = ["# org_id<TAB>name<TAB>demonyms"]
    for i in range(N_ORGS):
        gaz.append(f"{ids[i]}\t{names[i]}\t{','.join(demonyms(names[i]))}")
    write(fx / "gazetteer.tsv", "\n".join(gaz) + "\n")

    sites = ["org_id,seed_url"]
    web = fx / "web"
    for i in range(N_SITES):
        slug = names[i].lower()
        sites.append(f"{ids[i]},https://www.{slug}.es/")
        if i == N_SITES - 1:
            continue  # seed host intentionally absent: exercises the zero-page warning path
        build_site(rng, web, slug, names[i], rows[i], with_subdomain=(i % 5 == 0))
    write(fx / "sites.csv", "\n".join(sites) + "\n")

    config = {
        "seed": 7,
        "paths": {
            "schema": "schema.txt",
            "surveys": "fixtures/surveys.csv",
            "sites": "fixtures/sites.csv",
            "gazetteer": "fixtures/gazetteer.tsv",
            "stopwords": "stopwords_es.txt",
            "fixture_dir": "fixtures/web",
            "output_dir": "../out",
        },
        "ingest": {"missing_policy": "zero"},
        "dti": {"weights": WEIGHTS, "mapping": MAPPING},
        "crawl": {"max_depth": 2, "max_pages": 200, "per_host_delay": 1.0, "respect_robots": True,
                  "user_agent": "dti-corpus-builder/1.0", "timeout": 10, "workers": 4, "offline": True},
        "features": {"dim": 1024, "max_chars": 0},
        "train": {"hidden": [128, 64, 32], "epochs": 1000, "learning_rate": 0.0003, "batch_size": 8, "momentum": 0.9},
        "text_train": {"epochs": 300},
        "eval": {"protocol": "kfold", "k": 10, "test_fraction": 0.25, "threads": 1},
        "kpis": {
            "missing": "exclude",
            "definitions": [
                {"name": n, "group": g, "field": f, "predicate": p, "polarity": pol,
                 "note": "reconstructed: the original survey question behind this dashboard figure is unknown"}
                for n, g, f, p, pol, _ in KPIS
            ],
        },
        "sensors": SENSORS,
    }
    write(ROOT / "config.json", json.dumps(config, indent=2, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
