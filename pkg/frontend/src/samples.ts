import { createSample, listSamples } from "./api.js";
import { clear, el, errorBanner } from "./widgets.js";

// Mirrors the server's sample-name rule so obvious typos never leave the page.
export const SAMPLE_NAME = /^[A-Z]{2}_[0-9]{2}$/;

export function validateSampleName(name: string): string | null {
  if (SAMPLE_NAME.test(name)) return null;
  return "sample name must be two capital letters, underscore, two digits (e.g. BA_01)";
}

async function renderList(target: HTMLElement): Promise<void> {
  clear(target);
  try {
    const samples = await listSamples();
    const table = el("table", "samples");
    const head = el("tr");
    for (const title of ["name", "kind", "created"]) head.appendChild(el("th", "", title));
    table.appendChild(head);
    for (const sample of samples) {
      const tr = el("tr");
      tr.appendChild(el("td", "", sample.name));
      tr.appendChild(el("td", "", sample.kind));
      tr.appendChild(el("td", "", sample.created_at));
      table.appendChild(tr);
    }
    target.appendChild(table);
    target.appendChild(el("p", "status", `${samples.length} samples`));
  } catch (err) {
    target.appendChild(errorBanner(err));
  }
}

export function renderSamplesView(container: HTMLElement): void {
  clear(container);
  container.appendChild(el("h2", "", "Samples"));

  const form = el("form", "sample-form");
  const nameInput = el("input") as HTMLInputElement;
  nameInput.name = "name";
  nameInput.placeholder = "BA_01";
  const kindInput = el("input") as HTMLInputElement;
  kindInput.name = "kind";
  kindInput.placeholder = "kind (optional)";
  const submit = el("button", "", "Register") as HTMLButtonElement;
  submit.type = "submit";
  const feedback = el("div", "form-feedback");
  form.appendChild(nameInput);
  form.appendChild(kindInput);
  form.appendChild(submit);
  form.appendChild(feedback);

  const listBox = el("div", "sample-list");

  form.addEventListener("submit", async (event) => {
    event.preventDefault();
    clear(feedback);
    const problem = validateSampleName(nameInput.value.trim());
    if (problem) {
      feedback.appendChild(el("p", "validation-error", problem));
      return;
    }
    try {
      const sample = await createSample(nameInput.value.trim(), kindInput.value.trim());
      feedback.appendChild(el("p", "ok", `registered ${sample.name}`));
      nameInput.value = "";
      await renderList(listBox);
    } catch (err) {
      feedback.appendChild(errorBanner(err));
    }
  });

  container.appendChild(form);
  container.appendChild(listBox);
  void renderList(listBox);
}
