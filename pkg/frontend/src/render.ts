import type { Phase } from "./state.js";
import type { Grade, ItemView, RatingDistribution, Rubric } from "./types.js";
import { GRADES } from "./types.js";

// DOM is rebuilt from the phase on every change; all quiz text goes
// through textContent so nothing from the dataset is interpreted as
// markup.

export interface Handlers {
  onRate(grade: Grade): void;
  onReveal(): void;
  onRetry(): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderRubric(rubric: Rubric | null): HTMLElement {
  const box = el("details", "rubric");
  box.appendChild(el("summary", undefined, "Değerlendirme ölçütleri (rubric)"));
  if (!rubric) {
    box.appendChild(el("p", undefined, "Rubrik yükleniyor..."));
    return box;
  }
  const list = el("dl");
  for (const entry of rubric.ratings) {
    // rubric strings are displayed exactly as shipped by the server
    list.appendChild(el("dt", undefined, entry.grade));
    list.appendChild(el("dd", undefined, entry.tr));
    list.appendChild(el("dd", "rubric-en", entry.en));
  }
  box.appendChild(list);
  return box;
}

function renderItem(
  item: ItemView,
  answerRevealed: boolean,
  handlers: Handlers,
): HTMLElement {
  const card = el("section", "card");
  card.appendChild(el("h2", "doc-title", item.doc_title));
  const context = el("div", "context");
  context.appendChild(el("p", undefined, item.context));
  card.appendChild(context);

  const question = el("div", "question");
  question.appendChild(el("p", "stem", item.stem));
  if (item.kind === "mcq") {
    const options = el("ul", "options");
    for (const option of item.options) {
      options.appendChild(el("li", undefined, `${option.label}) ${option.text}`));
    }
    question.appendChild(options);
  }
  card.appendChild(question);

  const answerRow = el("div", "answer-row");
  if (answerRevealed) {
    answerRow.appendChild(el("p", "answer", `Cevap: ${item.answer}`));
  } else {
    const reveal = el("button", "reveal", "Cevabı göster (boşluk)");
    reveal.addEventListener("click", () => handlers.onReveal());
    answerRow.appendChild(reveal);
  }
  card.appendChild(answerRow);
  return card;
}

function renderRatingBar(submitting: boolean, handlers: Handlers): HTMLElement {
  const bar = el("div", "rating-bar");
  for (const grade of GRADES) {
    const button = el("button", "rate", grade);
    button.disabled = submitting;
    button.addEventListener("click", () => handlers.onRate(grade));
    bar.appendChild(button);
  }
  bar.appendChild(el("span", "hint", "klavye: A-E veya 1-5"));
  return bar;
}

function renderDistribution(distribution: RatingDistribution | null): HTMLElement {
  const box = el("div", "distribution");
  if (!distribution || distribution.total === 0) {
    box.appendChild(el("p", undefined, "Henüz derecelendirme yok."));
    return box;
  }
  const list = el("ul");
  for (const grade of GRADES) {
    const count = distribution.counts[grade] ?? 0;
    const pct = distribution.percentages[grade] ?? 0;
    list.appendChild(el("li", undefined, `${grade}: ${count} (${pct.toFixed(1)}%)`));
  }
  box.appendChild(list);
  box.appendChild(el("p", undefined, `Toplam: ${distribution.total}`));
  return box;
}

export function render(
  root: HTMLElement,
  phase: Phase,
  annotator: string,
  rubric: Rubric | null,
  handlers: Handlers,
): void {
  root.replaceChildren();
  const header = el("header");
  header.appendChild(el("h1", undefined, "Quiz değerlendirme"));
  header.appendChild(el("span", "annotator", `değerlendiren: ${annotator}`));
  root.appendChild(header);

  switch (phase.kind) {
    case "loading":
      root.appendChild(el("p", "status", "Yükleniyor..."));
      break;
    case "failed": {
      const banner = el("div", "error-banner");
      banner.appendChild(el("p", undefined, `Sunucuya ulaşılamadı: ${phase.message}`));
      const retry = el("button", "retry", "Tekrar dene");
      retry.addEventListener("click", () => handlers.onRetry());
      banner.appendChild(retry);
      root.appendChild(banner);
      break;
    }
    case "done": {
      root.appendChild(el("p", "status", `Bitti: ${phase.total} sorunun tamamı derecelendirildi.`));
      root.appendChild(renderDistribution(phase.distribution));
      break;
    }
    case "reviewing": {
      root.appendChild(
        el("p", "progress", `İlerleme: ${phase.rated}/${phase.total}`),
      );
      if (phase.inlineError) {
        root.appendChild(el("p", "inline-error", phase.inlineError));
      }
      root.appendChild(renderItem(phase.item, phase.answerRevealed, handlers));
      root.appendChild(renderRatingBar(phase.submitting, handlers));
      root.appendChild(renderRubric(rubric));
      break;
    }
  }
}
