import { ReviewApi } from "./api.js";
import { gradeForKey, isRevealKey } from "./keyboard.js";
import { render } from "./render.js";
import { ReviewSession } from "./state.js";
import type { Rubric } from "./types.js";

// The annotator id travels in the query string, so a reload lands in
// the same place without any client-side storage of review state.

function annotatorFromUrl(): string | null {
  const value = new URLSearchParams(window.location.search).get("annotator");
  return value && value.trim() ? value.trim() : null;
}

function renderAnnotatorForm(root: HTMLElement): void {
  root.replaceChildren();
  const form = document.createElement("form");
  form.className = "annotator-form";
  const label = document.createElement("label");
  label.textContent = "Değerlendiren kimliğiniz: ";
  const input = document.createElement("input");
  input.name = "annotator";
  input.required = true;
  input.placeholder = "örn. judge-1";
  label.appendChild(input);
  const go = document.createElement("button");
  go.textContent = "Başla";
  form.appendChild(label);
  form.appendChild(go);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const params = new URLSearchParams(window.location.search);
    params.set("annotator", input.value.trim());
    window.location.search = params.toString();
  });
  root.appendChild(form);
}

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");

  const annotator = annotatorFromUrl();
  if (!annotator) {
    renderAnnotatorForm(root);
    return;
  }

  const api = new ReviewApi("");
  const session = new ReviewSession(api, annotator);
  let rubric: Rubric | null = null;

  const handlers = {
    onRate: (grade: Parameters<typeof session.submitRating>[0]) => {
      void session.submitRating(grade);
    },
    onReveal: () => session.revealAnswer(),
    onRetry: () => {
      void session.loadNext();
    },
  };

  session.onChange(() => render(root, session.phase, annotator, rubric, handlers));

  window.addEventListener("keydown", (event) => {
    const target = event.target as HTMLElement | null;
    if (target && (target.tagName === "INPUT" || target.tagName === "TEXTAREA")) {
      return;
    }
    const grade = gradeForKey(event.key);
    if (grade) {
      event.preventDefault();
      void session.submitRating(grade);
      return;
    }
    if (isRevealKey(event.key)) {
      event.preventDefault();
      session.revealAnswer();
    }
  });

  api
    .fetchRubric()
    .then((loaded) => {
      rubric = loaded;
      render(root, session.phase, annotator, rubric, handlers);
    })
    .catch(() => {
      // rubric panel stays in its loading state; reviewing still works
    });

  await session.start();
}

void boot();
