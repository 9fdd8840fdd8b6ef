"""Generate the 50-page HTML oracle corpus and freeze jusText's verdicts.

Pages are synthetic but mimic crawled news/blog/shop layouts: navigation
lists, headings, article paragraphs, bylines, sidebars, tables, forms,
scripts, comments, entities, <br> runs and some unclosed tags. The reference
implementation (pip package ``jusText``) classifies every page with the
bundled stopword list of the page's language; the result is written to
``tests/data/boilerplate/oracle.json``.

    python scripts/build_boilerplate_oracle.py
"""

import json
import random
from html import escape
from pathlib import Path

import justext

from harvest.boilerplate import StopwordList

ROOT = Path(__file__).resolve().parents[1]
SEED = ROOT / "src" / "harvest" / "data" / "seed"
OUT = ROOT / "tests" / "data" / "boilerplate"
N_PAGES = 50

NAV = {
    "is": ["Forsíða", "Fréttir", "Íþróttir", "Menning", "Viðskipti", "Veður", "Um okkur",
           "Hafa samband", "Innskráning", "Áskrift", "Leit", "Smáauglýsingar"],
    "en": ["Home", "News", "Sport", "Culture", "Business", "Weather", "About us",
           "Contact", "Log in", "Subscribe", "Search", "Classifieds"],
}
SHORT = {
    "is": ["Deila", "Lesa meira", "Prenta", "Fleiri fréttir", "Mest lesið", "Tengdar fréttir",
           "Skráðu þig á póstlistann", "Sími 555 1234", "Opið alla virka daga", "Athugasemdir"],
    "en": ["Share", "Read more", "Print", "More news", "Most read", "Related stories",
           "Sign up for our newsletter", "Phone 555 1234", "Open every weekday", "Comments"],
}
COOKIE = {
    "is": "Við notum vafrakökur til að bæta upplifun þína á vefnum og til að greina umferð, "
          "en þú getur alltaf breytt stillingum þínum ef þú vilt það.",
    "en": "We use cookies to improve your experience on the site and to analyse traffic, "
          "but you can change your settings at any time if you want to.",
}
MONTHS = {"is": ["janúar", "febrúar", "mars", "apríl", "maí", "júní"],
          "en": ["January", "February", "March", "April", "May", "June"]}


def load_seed(lang):
    return (SEED / f"{lang}.txt").read_text("utf-8").splitlines()


class PageMaker:
    def __init__(self, rng, lang):
        self.rng = rng
        self.lang = lang
        self.sentences = load_seed(lang)

    def sents(self, lo, hi):
        return " ".join(self.rng.sample(self.sentences, self.rng.randint(lo, hi)))

    def inline(self, text):
        """Sprinkle inline markup and entities over a sentence run."""
        words = [escape(w, quote=False) for w in text.split()]
        r = self.rng
        if len(words) > 6 and r.random() < 0.4:
            i = r.randrange(len(words) - 2)
            words[i] = f'<a href="/grein/{r.randint(1, 999)}">{words[i]} {words[i + 1]}</a>'
            del words[i + 1]
        if len(words) > 6 and r.random() < 0.4:
            i = r.randrange(len(words))
            words[i] = f"<strong>{words[i]}</strong>"
        if len(words) > 6 and r.random() < 0.2:
            i = r.randrange(len(words))
            words[i] = f"{words[i]}&nbsp;&amp;"
        if len(words) > 10 and r.random() < 0.3:
            i = r.randrange(3, len(words) - 3)
            words[i] = f"{words[i]}<br>"
        return " ".join(words)

    def nav(self):
        items = self.rng.sample(NAV[self.lang], self.rng.randint(4, 9))
        lis = "".join(f'<li><a href="/{i}">{escape(t)}</a></li>' for i, t in enumerate(items))
        return f'<div class="nav"><ul>{lis}</ul></div>'

    def article(self):
        r = self.rng
        parts = [f"<h1>{escape(self.sents(1, 1)[:60])}</h1>"]
        if r.random() < 0.7:
            parts.append(f'<p class="date">{r.randint(1, 28)}. {r.choice(MONTHS[self.lang])} '
                         f"{r.randint(2008, 2020)}</p>")
        for _ in range(r.randint(2, 7)):
            kind = r.random()
            if kind < 0.55:
                parts.append(f"<p>{self.inline(self.sents(2, 6))}</p>")
            elif kind < 0.7:
                parts.append(f"<p>{self.inline(self.sents(1, 1))}</p>")
            elif kind < 0.8:
                parts.append(f"<h2>{escape(r.choice(SHORT[self.lang]))}</h2>")
            elif kind < 0.88:
                parts.append(f"<blockquote>{self.inline(self.sents(1, 3))}</blockquote>")
            elif kind < 0.94:
                # unclosed paragraph, closed implicitly by the next block
                parts.append(f"<p>{self.inline(self.sents(2, 4))}")
            else:
                parts.append(f"<div>{self.inline(self.sents(1, 2))}<br><br>"
                             f"{self.inline(self.sents(1, 3))}</div>")
        return '<div class="article">' + "\n".join(parts) + "</div>"

    def sidebar(self):
        r = self.rng
        items = []
        for _ in range(r.randint(2, 6)):
            text = escape(self.sents(1, 1)[:r.randint(25, 80)])
            items.append(f'<li><a href="/frett/{r.randint(1, 9999)}">{text}</a>')
        return f'<div class="side"><h3>{escape(r.choice(SHORT[self.lang]))}</h3><ul>{"".join(items)}</ul></div>'

    def table(self):
        r = self.rng
        rows = []
        for _ in range(r.randint(1, 4)):
            cells = "".join(f"<td>{escape(r.choice(SHORT[self.lang]))}" for _ in range(r.randint(2, 3)))
            rows.append(f"<tr>{cells}")
        return "<table>" + "".join(rows) + "</table>"

    def form(self):
        return ('<form action="/leit"><input type="text" name="q"><select name="s">'
                '<option>1</option><option>2</option></select>'
                f'<textarea>{escape(self.sents(1, 1))}</textarea>'
                f"<button>{escape(self.rng.choice(NAV[self.lang]))}</button></form>")

    def footer(self):
        r = self.rng
        bits = [f"<p>&copy; {r.randint(2008, 2020)} {escape(r.choice(NAV[self.lang]))}</p>"]
        if r.random() < 0.6:
            bits.append(f'<p class="cookie">{escape(COOKIE[self.lang])}</p>')
        if r.random() < 0.5:
            bits.append(f"<p>{escape(r.choice(SHORT[self.lang]))}<br>{escape(r.choice(SHORT[self.lang]))}</p>")
        return '<div class="footer">' + "".join(bits) + "</div>"

    def page(self):
        r = self.rng
        head = ("<head><meta charset=\"utf-8\"><title>" + escape(r.choice(NAV[self.lang])) +
                "</title><style>body { font: 12px sans-serif; }</style>"
                "<script>window.dataLayer = []; if (a < b) { x = '<p>'; }</script></head>")
        body = [self.nav()]
        if r.random() < 0.3:
            body.append("<!-- auglýsing -->" + self.table())
        body.append(self.article())
        if r.random() < 0.5:
            body.append(self.sidebar())
        if r.random() < 0.3:
            body.append(self.form())
        if r.random() < 0.2:
            body.append(f"<center>{escape(r.choice(SHORT[self.lang]))}</center></div>")
        if r.random() < 0.3:
            body.append(f"<pre>{escape(self.sents(1, 2))}</pre>")
        body.append(self.footer())
        body.append("<script>track();</script>")
        return f"<!DOCTYPE html>\n<html>{head}<body>\n" + "\n".join(body) + "\n</body></html>\n"


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = random.Random(20200301)
    oracle = []
    for n in range(N_PAGES):
        lang = "en" if n % 5 == 4 else "is"
        html = PageMaker(rng, lang).page()
        name = f"page_{n:02d}.html"
        (OUT / name).write_text(html, encoding="utf-8")
        stoplist = StopwordList.bundled(lang).words
        paragraphs = justext.justext(html, stoplist)
        oracle.append({
            "page": name,
            "stopwords": lang,
            "blocks": [{"text": p.text,
                        "cf_class": p.cf_class.replace("neargood", "near-good"),
                        "final_class": p.class_type} for p in paragraphs],
        })
    meta = {"reference": f"jusText {getattr(justext, '__version__', '3.x')}",
            "params": "defaults", "pages": oracle}
    (OUT / "oracle.json").write_text(json.dumps(meta, ensure_ascii=False, indent=1) + "\n",
                                     encoding="utf-8")
    n_blocks = sum(len(p["blocks"]) for p in oracle)
    n_good = sum(b["final_class"] == "good" for p in oracle for b in p["blocks"])
    print(f"{N_PAGES} pages, {n_blocks} blocks ({n_good} good) -> {OUT.relative_to(ROOT)}")


if __name__ == "__main__":
    main()
