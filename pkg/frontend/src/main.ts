// Bootstrap: wire the store to the DOM.  The job id lives in the URL
// fragment so a reload reconstructs everything from the server.

import { StudioApi } from "./api";
import { render } from "./render";
import { StudioStore } from "./state";
import type { OverrideForm } from "./validate";

const apiBase = (window as any).WORDART_API ?? "";
const api = new StudioApi(apiBase);
const store = new StudioStore(api);

const $ = <T extends HTMLElement>(selector: string): T => {
  const node = document.querySelector(selector);
  if (!node) throw new Error(`missing element ${selector}`);
  return node as T;
};

const output = $("#app");
const textInput = $<HTMLInputElement>("#text");
const requestInput = $<HTMLInputElement>("#request");
const submitButton = $<HTMLButtonElement>("#submit");
const ratioInput = $<HTMLInputElement>("#ratio");
const kInput = $<HTMLInputElement>("#min-k");
const stylePromptInput = $<HTMLInputElement>("#style-prompt");
const texturePromptInput = $<HTMLInputElement>("#texture-prompt");
const textureSeedInput = $<HTMLInputElement>("#texture-seed");
const texturizeButton = $<HTMLButtonElement>("#texturize");

let textureUrl: string | null = null;

function currentOverrides(): OverrideForm {
  const form: OverrideForm = {};
  if (ratioInput.value !== "") form.deform_ratio = Number(ratioInput.value);
  if (kInput.value !== "") form.min_successes_K = Number(kInput.value);
  if (stylePromptInput.value) form.style_prompt = stylePromptInput.value;
  if (texturePromptInput.value) form.texture_prompt = texturePromptInput.value;
  return form;
}

function syncControls() {
  submitButton.disabled = !store.canSubmit(textInput.value, requestInput.value);
  texturizeButton.disabled = !store.canTexturize();
}

function showTexture() {
  const holder = document.querySelector("#texture-result");
  if (!holder || !store.state.texture) return;
  if (textureUrl) URL.revokeObjectURL(textureUrl);
  const blob = new Blob([store.state.texture.bytes], { type: "image/png" });
  textureUrl = URL.createObjectURL(blob);
  holder.innerHTML =
    `<img src="${textureUrl}" alt="textured design">` +
    `<a download="textured.png" href="${textureUrl}">Download PNG</a>`;
}

store.subscribe((state) => {
  output.innerHTML = render(state, apiBase);
  showTexture();
  syncControls();
  if (state.jobId) window.location.hash = `job=${state.jobId}`;
});

for (const input of [textInput, requestInput]) {
  input.addEventListener("input", syncControls);
}
for (const input of [ratioInput, kInput, stylePromptInput, texturePromptInput]) {
  input.addEventListener("input", () => {
    store.setOverrides(currentOverrides());
    syncControls();
  });
}
textureSeedInput.addEventListener("input", () => {
  store.setTextureSeed(Number(textureSeedInput.value) || 0);
});
texturePromptInput.addEventListener("input", () => {
  store.setTexturePrompt(texturePromptInput.value);
});

submitButton.addEventListener("click", () => {
  void store.submit(textInput.value, requestInput.value);
});
texturizeButton.addEventListener("click", () => {
  store.setTexturePrompt(texturePromptInput.value);
  store.setTextureSeed(Number(textureSeedInput.value) || 0);
  void store.texturizeSelected();
});

output.addEventListener("click", (event) => {
  const card = (event.target as HTMLElement).closest<HTMLElement>(".card");
  if (!card) return;
  store.select(Number(card.dataset.iteration), Number(card.dataset.index));
});

// Reload with #job=<id>: reattach and let the server rebuild all state.
const match = window.location.hash.match(/job=([0-9a-f]+)/);
if (match) store.attach(match[1]);
syncControls();
